/**
 * VOX1 volume container codec.
 *
 * Layout: 24-byte little-endian header (magic "VOX1", u16 version = 1,
 * u8 dtype code, u8 reserved = 0, u32 frames/height/width/channels),
 * followed by the tightly packed C-order payload. Dtype codes: 0 = uint8,
 * 1 = float32.
 */

import { BoundArray, BYTES_PER_ELEMENT, Dtype, elementCount, makeArray } from "./array.js";
import { BadMagic, DtypeUnknown, FormatError, TruncatedFile } from "./errors.js";

export const VOX1_HEADER_SIZE = 24;

const MAGIC = new Uint8Array([0x56, 0x4f, 0x58, 0x31]); // "VOX1"

const DTYPE_CODES: Readonly<Record<string, number>> = { uint8: 0, float32: 1 };
const CODE_DTYPES: Readonly<Record<number, Dtype>> = { 0: "uint8", 1: "float32" };

/** Serialize a 4-D uint8 or float32 array to VOX1 bytes. */
export function encodeVox1(arr: BoundArray): Uint8Array {
  const code = DTYPE_CODES[arr.dtype];
  if (code === undefined) {
    throw new DtypeUnknown(`VOX1 stores uint8 or float32, got ${arr.dtype}`);
  }
  if (arr.shape.length !== 4) {
    throw new FormatError(`VOX1 stores 4-D volumes, got shape [${arr.shape.join(",")}]`);
  }
  for (const s of arr.shape) {
    if (s < 1) throw new FormatError(`VOX1 extents must be >= 1, got [${arr.shape.join(",")}]`);
  }
  const out = new Uint8Array(VOX1_HEADER_SIZE + arr.data.byteLength);
  out.set(MAGIC, 0);
  const view = new DataView(out.buffer);
  view.setUint16(4, 1, true);
  view.setUint8(6, code);
  view.setUint8(7, 0);
  for (let i = 0; i < 4; ++i) view.setUint32(8 + 4 * i, arr.shape[i]!, true);
  out.set(arr.data, VOX1_HEADER_SIZE);
  return out;
}

/** Parse VOX1 bytes, validating the header and payload size. */
export function decodeVox1(bytes: Uint8Array): BoundArray {
  if (bytes.byteLength < VOX1_HEADER_SIZE) {
    throw new TruncatedFile(`${bytes.byteLength} bytes, need ${VOX1_HEADER_SIZE} for the header`);
  }
  for (let i = 0; i < 4; ++i) {
    if (bytes[i] !== MAGIC[i]) {
      throw new BadMagic(`bad magic, expected "VOX1"`);
    }
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const version = view.getUint16(4, true);
  if (version !== 1) throw new FormatError(`unsupported VOX1 version ${version}`);
  const code = view.getUint8(6);
  const reserved = view.getUint8(7);
  if (reserved !== 0) throw new FormatError(`reserved header byte is ${reserved}, not 0`);
  const dtype = CODE_DTYPES[code];
  if (dtype === undefined) throw new DtypeUnknown(`unknown dtype code ${code}`);
  const shape: number[] = [];
  for (let i = 0; i < 4; ++i) shape.push(view.getUint32(8 + 4 * i, true));
  if (Math.min(...shape) < 1) {
    throw new FormatError(`zero extent in dims [${shape.join(",")}]`);
  }
  const expected = elementCount(shape) * BYTES_PER_ELEMENT[dtype];
  const payload = bytes.byteLength - VOX1_HEADER_SIZE;
  if (payload < expected) {
    throw new TruncatedFile(`${payload} data bytes, header declares ${expected}`);
  }
  if (payload > expected) {
    throw new FormatError(`${payload - expected} trailing bytes after declared data`);
  }
  return makeArray(dtype, shape, bytes.subarray(VOX1_HEADER_SIZE));
}
