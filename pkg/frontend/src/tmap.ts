/**
 * TMAP tensor container codec (safetensors layout).
 *
 * Layout: u64 little-endian header length, a minified JSON name table
 * space-padded so the data region starts 8-byte aligned, then the tensor
 * blobs tightly packed in table order. Each table entry is
 * {"dtype": "U8"|"F32"|"F64", "shape": [...], "data_offsets": [begin, end]}
 * with offsets relative to the data region; entries must tile the region
 * exactly in JSON order. A "__metadata__" entry is ignored on read.
 */

import { BoundArray, BYTES_PER_ELEMENT, Dtype, elementCount, makeArray } from "./array.js";
import { DtypeUnknown, JsonMalformed, OverlappingOffsets, TruncatedFile } from "./errors.js";

const TAG_DTYPES: Readonly<Record<string, Dtype>> = { U8: "uint8", F32: "float32", F64: "float64" };
const DTYPE_TAGS: Readonly<Record<Dtype, string>> = { uint8: "U8", float32: "F32", float64: "F64" };

// the reference writer emits ASCII-only JSON; escape anything outside the
// printable ASCII range the same way so output bytes match
function asciiEscape(json: string): string {
  return json.replace(/[-￿]/g, (ch) => "\\u" + ch.charCodeAt(0).toString(16).padStart(4, "0"));
}

/** Serialize named tensors to TMAP bytes, laid out in map order. */
export function encodeTmap(tensors: ReadonlyMap<string, BoundArray>): Uint8Array {
  const entries: Record<string, unknown> = {};
  const blobs: Uint8Array[] = [];
  let offset = 0;
  for (const [name, arr] of tensors) {
    entries[name] = {
      dtype: DTYPE_TAGS[arr.dtype],
      shape: [...arr.shape],
      data_offsets: [offset, offset + arr.data.byteLength],
    };
    blobs.push(arr.data);
    offset += arr.data.byteLength;
  }
  // JS objects reorder integer-like keys; serialize entry by entry in map
  // order so the table matches the layout
  const parts: string[] = [];
  for (const [name] of tensors) {
    parts.push(`${JSON.stringify(name)}:${JSON.stringify(entries[name])}`);
  }
  const header = asciiEscape(`{${parts.join(",")}}`);
  const headerBytes = new TextEncoder().encode(header);
  const pad = (8 - ((8 + headerBytes.byteLength) % 8)) % 8;
  const out = new Uint8Array(8 + headerBytes.byteLength + pad + offset);
  new DataView(out.buffer).setBigUint64(0, BigInt(headerBytes.byteLength + pad), true);
  out.set(headerBytes, 8);
  out.fill(0x20, 8 + headerBytes.byteLength, 8 + headerBytes.byteLength + pad);
  let cursor = 8 + headerBytes.byteLength + pad;
  for (const blob of blobs) {
    out.set(blob, cursor);
    cursor += blob.byteLength;
  }
  return out;
}

// top-level key order of a JSON object, in textual order; JSON.parse loses
// the order of integer-like keys
function topLevelKeys(json: string): string[] {
  const keys: string[] = [];
  let depth = 0;
  let i = 0;
  const n = json.length;
  const skipString = (start: number): number => {
    let j = start + 1;
    while (j < n) {
      const c = json[j];
      if (c === "\\") j += 2;
      else if (c === '"') return j + 1;
      else j += 1;
    }
    return j;
  };
  let expectKey = false;
  while (i < n) {
    const c = json[i];
    if (c === '"') {
      const end = skipString(i);
      if (depth === 1 && expectKey) {
        keys.push(JSON.parse(json.slice(i, end)) as string);
        expectKey = false;
      }
      i = end;
    } else if (c === "{" || c === "[") {
      if (c === "{" && depth === 0) expectKey = true;
      depth += 1;
      i += 1;
    } else if (c === "}" || c === "]") {
      depth -= 1;
      i += 1;
    } else if (c === "," && depth === 1) {
      expectKey = true;
      i += 1;
    } else {
      i += 1;
    }
  }
  return keys;
}

function isIntList(x: unknown, len?: number): x is number[] {
  return Array.isArray(x)
    && (len === undefined || x.length === len)
    && x.every((v) => Number.isInteger(v) && v >= 0);
}

/** Parse TMAP bytes; the returned map follows the JSON name table order. */
export function decodeTmap(bytes: Uint8Array): Map<string, BoundArray> {
  if (bytes.byteLength < 8) {
    throw new TruncatedFile(`${bytes.byteLength} bytes, need 8 for header length`);
  }
  const big = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength).getBigUint64(0, true);
  if (big > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new JsonMalformed(`header length ${big} is not addressable`);
  }
  const hlen = Number(big);
  if (bytes.byteLength < 8 + hlen) {
    throw new TruncatedFile(`header declares ${hlen} JSON bytes, ${bytes.byteLength - 8} present`);
  }
  const headerText = new TextDecoder("utf-8", { fatal: true, ignoreBOM: true });
  let table: unknown;
  let rawJson: string;
  try {
    rawJson = headerText.decode(bytes.subarray(8, 8 + hlen));
    table = JSON.parse(rawJson);
  } catch (e) {
    throw new JsonMalformed(`bad header JSON: ${(e as Error).message}`);
  }
  if (typeof table !== "object" || table === null || Array.isArray(table)) {
    throw new JsonMalformed("header must be a JSON object");
  }
  const entries = table as Record<string, unknown>;
  // duplicate keys keep their first position and last value, like a dict
  const names = [...new Set(topLevelKeys(rawJson))].filter((k) => k !== "__metadata__");

  const data = bytes.subarray(8 + hlen);
  const out = new Map<string, BoundArray>();
  let cursor = 0;
  for (const name of names) {
    const entry = entries[name];
    if (
      typeof entry !== "object" || entry === null || Array.isArray(entry)
      || Object.keys(entry).sort().join(",") !== "data_offsets,dtype,shape"
    ) {
      throw new JsonMalformed(`tensor ${JSON.stringify(name)}: entry must have exactly dtype/shape/data_offsets`);
    }
    const { dtype: tag, shape, data_offsets: offs } = entry as Record<string, unknown>;
    const dtype = typeof tag === "string" ? TAG_DTYPES[tag] : undefined;
    if (dtype === undefined) {
      throw new DtypeUnknown(`tensor ${JSON.stringify(name)}: dtype ${JSON.stringify(tag)}`);
    }
    if (!isIntList(shape)) {
      throw new JsonMalformed(`tensor ${JSON.stringify(name)}: bad shape ${JSON.stringify(shape)}`);
    }
    if (!isIntList(offs, 2)) {
      throw new JsonMalformed(`tensor ${JSON.stringify(name)}: bad data_offsets ${JSON.stringify(offs)}`);
    }
    const [b, e] = offs as [number, number];
    const nBytes = elementCount(shape) * BYTES_PER_ELEMENT[dtype];
    if (e - b !== nBytes) {
      throw new JsonMalformed(
        `tensor ${JSON.stringify(name)}: shape [${shape.join(",")}] is ${nBytes} bytes, offsets span ${e - b}`,
      );
    }
    if (b !== cursor) {
      throw new OverlappingOffsets(
        `tensor ${JSON.stringify(name)}: starts at ${b}, expected ${cursor} (offsets must tile the data region in order)`,
      );
    }
    if (e > data.byteLength) {
      throw new TruncatedFile(
        `tensor ${JSON.stringify(name)}: needs bytes up to ${e}, data region has ${data.byteLength}`,
      );
    }
    cursor = e;
    out.set(name, makeArray(dtype, shape, data.subarray(b, e)));
  }
  if (cursor !== data.byteLength) {
    throw new OverlappingOffsets(`${data.byteLength - cursor} data bytes not covered by any tensor`);
  }
  return out;
}
