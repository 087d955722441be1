/**
 * Dense C-order arrays crossing the process boundary.
 *
 * A BoundArray owns its bytes: construction copies the caller's buffer, so
 * no caller memory is aliased after the call returns. Element bytes are
 * little-endian, matching the on-disk containers.
 */

export type Dtype = "uint8" | "float32" | "float64";

export const BYTES_PER_ELEMENT: Readonly<Record<Dtype, number>> = {
  uint8: 1,
  float32: 4,
  float64: 8,
};

export interface BoundArray {
  readonly dtype: Dtype;
  /** Extents, outermost first; every extent is a non-negative integer. */
  readonly shape: readonly number[];
  /** Raw element bytes, C-order, tightly packed, little-endian. */
  readonly data: Uint8Array;
}

/** Number of elements implied by a shape (1 for the empty shape). */
export function elementCount(shape: readonly number[]): number {
  let n = 1;
  for (const s of shape) n *= s;
  return n;
}

function checkShape(shape: readonly number[]): void {
  for (const s of shape) {
    if (!Number.isInteger(s) || s < 0) {
      throw new RangeError(`shape extents must be non-negative integers, got ${s}`);
    }
  }
}

/**
 * Build a BoundArray from raw bytes or a typed array, copying the input.
 *
 * The byte length must equal elementCount(shape) times the element size.
 */
export function makeArray(
  dtype: Dtype,
  shape: readonly number[],
  data: Uint8Array | Float32Array | Float64Array,
): BoundArray {
  checkShape(shape);
  if (!(data instanceof Uint8Array)) {
    const want = dtype === "float32" ? Float32Array : Float64Array;
    if (dtype === "uint8" || !(data instanceof want)) {
      throw new TypeError(`${dtype} arrays take ${dtype === "uint8" ? "Uint8Array" : want.name} or raw bytes`);
    }
  }
  const bytes = new Uint8Array(data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength));
  const expected = elementCount(shape) * BYTES_PER_ELEMENT[dtype];
  if (bytes.byteLength !== expected) {
    throw new RangeError(
      `shape [${shape.join(",")}] as ${dtype} needs ${expected} bytes, got ${bytes.byteLength}`,
    );
  }
  return { dtype, shape: [...shape], data: bytes };
}

/** View the elements through the matching typed-array constructor. */
export function typedView(arr: BoundArray): Uint8Array | Float32Array | Float64Array {
  // data always starts at offset 0 of its own buffer (makeArray copies),
  // so the view is correctly aligned for 4- and 8-byte elements
  switch (arr.dtype) {
    case "uint8":
      return arr.data;
    case "float32":
      return new Float32Array(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength / 4);
    case "float64":
      return new Float64Array(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength / 8);
  }
}

/** Byte-level equality of dtype, shape, and contents. */
export function arraysEqual(a: BoundArray, b: BoundArray): boolean {
  if (a.dtype !== b.dtype) return false;
  if (a.shape.length !== b.shape.length) return false;
  for (let i = 0; i < a.shape.length; ++i) {
    if (a.shape[i] !== b.shape[i]) return false;
  }
  if (a.data.byteLength !== b.data.byteLength) return false;
  for (let i = 0; i < a.data.byteLength; ++i) {
    if (a.data[i] !== b.data[i]) return false;
  }
  return true;
}
