/**
 * Bindings over the voxflow CLI: pipeline application, kernel inflation,
 * and class-balanced batch sampling.
 *
 * Every operation round-trips through the CLI's own file formats, so
 * results are byte-identical to direct CLI use. Calls are independent and
 * safe to issue from multiple workers on distinct arrays; each call uses
 * its own temporary directory.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { BoundArray } from "./array.js";
import { decodeTmap, encodeTmap } from "./tmap.js";
import { decodeVox1, encodeVox1 } from "./vox1.js";
import { runCli } from "./runner.js";

export type { BoundArray, Dtype } from "./array.js";
export {
  BYTES_PER_ELEMENT,
  arraysEqual,
  elementCount,
  makeArray,
  typedView,
} from "./array.js";
export {
  BadMagic,
  CliError,
  DtypeUnknown,
  FormatError,
  JsonMalformed,
  OverlappingOffsets,
  TruncatedFile,
} from "./errors.js";
export { decodeTmap, encodeTmap } from "./tmap.js";
export { VOX1_HEADER_SIZE, decodeVox1, encodeVox1 } from "./vox1.js";
export { cliCommand, runCli } from "./runner.js";

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "voxflow-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Apply an augmentation pipeline to a volume.
 *
 * The pipeline is given as JSON text (the same schema the CLI's --pipeline
 * flag reads). The same (pipelineJson, seed, sampleIndex, volume) always
 * produces byte-identical output. When seed is given it overrides the seed
 * recorded in the pipeline JSON.
 */
export function apply(
  pipelineJson: string,
  array: BoundArray,
  sampleIndex = 0,
  seed?: number,
): BoundArray {
  return withTempDir((dir) => {
    const inPath = join(dir, "in.vox");
    const outPath = join(dir, "out.vox");
    const pipePath = join(dir, "pipeline.json");
    writeFileSync(inPath, encodeVox1(array));
    writeFileSync(pipePath, pipelineJson);
    const args = [
      "augment",
      "--pipeline", pipePath,
      "--in", inPath,
      "--out", outPath,
      "--index", String(sampleIndex),
    ];
    if (seed !== undefined) args.push("--seed", String(seed));
    runCli(args);
    return decodeVox1(readFileSync(outPath));
  });
}

/**
 * Inflate a 2-D convolution kernel (kh, kw, cin, cout) to 3-D
 * (depth, kh, kw, cin, cout).
 *
 * mode "center" places the kernel on the middle depth plane (odd depth
 * only) with zeros elsewhere; "average" spreads kernel/depth onto every
 * plane.
 */
export function inflate(
  kernel: BoundArray,
  depth: number,
  mode: "center" | "average" = "center",
): BoundArray {
  return withTempDir((dir) => {
    const inPath = join(dir, "in.tmap");
    const outPath = join(dir, "out.tmap");
    writeFileSync(inPath, encodeTmap(new Map([["kernel", kernel]])));
    runCli([
      "inflate",
      "--in", inPath,
      "--out", outPath,
      "--depth", String(depth),
      "--mode", mode,
    ]);
    const out = decodeTmap(readFileSync(outPath)).get("kernel");
    if (out === undefined) {
      throw new Error("inflate output is missing the kernel tensor");
    }
    return out;
  });
}

/**
 * Draw class-balanced batches of sample indices.
 *
 * labels holds one 0/1 label per sample; each returned batch contains
 * round(posFraction * batchSize) positives. The sequence is a pure
 * function of (labels, batchSize, posFraction, seed) and asking for more
 * batches extends it without changing the prefix.
 */
export function batches(
  labels: readonly number[],
  batchSize: number,
  posFraction: number,
  seed: number,
  nBatches: number,
): number[][] {
  for (const l of labels) {
    if (l !== 0 && l !== 1) {
      throw new RangeError(`labels must be 0 or 1, got ${l}`);
    }
  }
  return withTempDir((dir) => {
    const labelsPath = join(dir, "labels.csv");
    const rows = labels.map((l, i) => `s${i},${l}`);
    writeFileSync(labelsPath, `sample_id,label\n${rows.join("\n")}\n`);
    const stdout = runCli([
      "sample",
      "--labels", labelsPath,
      "--batch-size", String(batchSize),
      "--pos-frac", String(posFraction),
      "--n", String(nBatches),
      "--seed", String(seed),
    ]);
    const text = stdout.toString("utf-8");
    const lines = text.split("\n").filter((line) => line.length > 0);
    return lines.map((line) => line.split(",").map((s) => Number.parseInt(s, 10)));
  });
}

/** Version of the underlying CLI, e.g. "0.1.0". */
export function version(): string {
  const out = runCli(["--version"]).toString("utf-8").trim();
  const m = /^voxflow (.+)$/.exec(out);
  if (m === null) {
    throw new Error(`unexpected --version output: ${JSON.stringify(out)}`);
  }
  return m[1]!;
}
