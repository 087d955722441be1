import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // parity cases each spawn CLI subprocesses
    testTimeout: 60_000,
  },
});
