/**
 * Subprocess boundary to the voxflow CLI.
 *
 * The binary is resolved from VOXFLOW_BIN (which may include leading
 * arguments, e.g. "python3 -m voxflow"), defaulting to "voxflow" on PATH.
 */

import { spawnSync } from "node:child_process";

import { CliError } from "./errors.js";

export function cliCommand(): string[] {
  const bin = process.env["VOXFLOW_BIN"] ?? "voxflow";
  const parts = bin.split(/\s+/).filter((p) => p.length > 0);
  if (parts.length === 0) {
    throw new CliError("VOXFLOW_BIN is empty", -1, "");
  }
  return parts;
}

/** Run a CLI subcommand; returns raw stdout, throws CliError on failure. */
export function runCli(args: string[]): Buffer {
  const [cmd, ...pre] = cliCommand();
  const proc = spawnSync(cmd!, [...pre, ...args], {
    maxBuffer: 1 << 30,
    env: process.env,
  });
  if (proc.error) {
    throw new CliError(`failed to launch ${cmd}: ${proc.error.message}`, -1, "");
  }
  if (proc.status !== 0) {
    const stderr = proc.stderr.toString("utf-8");
    throw new CliError(
      `voxflow ${args[0] ?? ""} exited ${proc.status}: ${stderr.trim()}`,
      proc.status ?? -1,
      stderr,
    );
  }
  return proc.stdout;
}
