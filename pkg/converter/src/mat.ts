/**
 * Minimal MAT-file (level 5) reader: enough to pull dense 2-D numeric arrays
 * out of little-endian files, including zlib-compressed elements.
 */

import * as zlib from "node:zlib";

export interface MatVariable {
  name: string;
  /** [rows, cols] as stored in the file */
  dims: number[];
  /** column-major values, converted to float64 */
  data: Float64Array;
}

const MI_INT8 = 1;
const MI_UINT8 = 2;
const MI_INT16 = 3;
const MI_UINT16 = 4;
const MI_INT32 = 5;
const MI_UINT32 = 6;
const MI_SINGLE = 7;
const MI_DOUBLE = 9;
const MI_INT64 = 12;
const MI_UINT64 = 13;
const MI_COMPRESSED = 15;
const MI_MATRIX = 14;

const NUMERIC_CLASSES = new Set([6, 7, 8, 9, 10, 11, 12, 13, 14, 15]);

interface Element {
  type: number;
  bytes: Buffer;
  next: number;
}

function readElement(buf: Buffer, offset: number): Element {
  if (offset + 8 > buf.length) {
    throw new Error(`truncated element tag at offset ${offset}`);
  }
  const first = buf.readUInt32LE(offset);
  const smallSize = first >>> 16;
  if (smallSize !== 0) {
    // small data element: type and byte count packed into one word
    const type = first & 0xffff;
    const bytes = buf.subarray(offset + 4, offset + 4 + smallSize);
    return { type, bytes, next: offset + 8 };
  }
  const type = first;
  const size = buf.readUInt32LE(offset + 4);
  if (offset + 8 + size > buf.length) {
    throw new Error(`element of ${size} bytes overruns file at offset ${offset}`);
  }
  const bytes = buf.subarray(offset + 8, offset + 8 + size);
  const padded = size % 8 === 0 ? size : size + (8 - (size % 8));
  return { type, bytes, next: offset + 8 + padded };
}

function numericToFloat64(type: number, bytes: Buffer): Float64Array {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const read = (width: number, get: (off: number) => number): Float64Array => {
    const n = Math.floor(bytes.byteLength / width);
    const out = new Float64Array(n);
    for (let i = 0; i < n; i++) out[i] = get(i * width);
    return out;
  };
  switch (type) {
    case MI_DOUBLE:
      return read(8, (o) => view.getFloat64(o, true));
    case MI_SINGLE:
      return read(4, (o) => view.getFloat32(o, true));
    case MI_INT8:
      return read(1, (o) => view.getInt8(o));
    case MI_UINT8:
      return read(1, (o) => view.getUint8(o));
    case MI_INT16:
      return read(2, (o) => view.getInt16(o, true));
    case MI_UINT16:
      return read(2, (o) => view.getUint16(o, true));
    case MI_INT32:
      return read(4, (o) => view.getInt32(o, true));
    case MI_UINT32:
      return read(4, (o) => view.getUint32(o, true));
    case MI_INT64:
      return read(8, (o) => Number(view.getBigInt64(o, true)));
    case MI_UINT64:
      return read(8, (o) => Number(view.getBigUint64(o, true)));
    default:
      throw new Error(`unsupported numeric element type ${type}`);
  }
}

function parseMatrix(bytes: Buffer): MatVariable | null {
  let offset = 0;
  const flagsEl = readElement(bytes, offset);
  offset = flagsEl.next;
  const arrayClass = flagsEl.bytes.readUInt32LE(0) & 0xff;

  const dimsEl = readElement(bytes, offset);
  offset = dimsEl.next;
  const dims: number[] = [];
  for (let i = 0; i + 4 <= dimsEl.bytes.length; i += 4) {
    dims.push(dimsEl.bytes.readInt32LE(i));
  }

  const nameEl = readElement(bytes, offset);
  offset = nameEl.next;
  const name = nameEl.bytes.toString("latin1").replace(/\0+$/, "");

  if (!NUMERIC_CLASSES.has(arrayClass)) {
    return null; // cells, structs, chars, sparse: not trial data
  }
  const realEl = readElement(bytes, offset);
  const data = numericToFloat64(realEl.type, realEl.bytes);
  const expected = dims.reduce((a, b) => a * b, 1);
  if (data.length !== expected) {
    throw new Error(`variable ${name}: ${data.length} values for dims [${dims.join("x")}]`);
  }
  return { name, dims, data };
}

/** Parse every top-level variable in a level-5 MAT file buffer. */
export function readMat(buf: Buffer): MatVariable[] {
  if (buf.length < 128) {
    throw new Error(`file too short for a MAT header (${buf.length} bytes)`);
  }
  const endian = buf.toString("latin1", 126, 128);
  if (endian === "IM") {
    // little-endian, as written by MATLAB on x86
  } else if (endian === "MI") {
    throw new Error("big-endian MAT files are not supported");
  } else {
    throw new Error("not a level-5 MAT file (bad endian indicator)");
  }

  const variables: MatVariable[] = [];
  let offset = 128;
  while (offset < buf.length) {
    const el = readElement(buf, offset);
    offset = el.next;
    if (el.type === MI_COMPRESSED) {
      const inflated = zlib.inflateSync(el.bytes);
      const inner = readElement(inflated, 0);
      if (inner.type === MI_MATRIX) {
        const parsed = parseMatrix(inner.bytes);
        if (parsed) variables.push(parsed);
      }
    } else if (el.type === MI_MATRIX) {
      const parsed = parseMatrix(el.bytes);
      if (parsed) variables.push(parsed);
    }
    // other top-level element types are skipped
  }
  return variables;
}

/** Row-major copy of a column-major 2-D variable. */
export function toRowMajor(variable: MatVariable): number[][] {
  if (variable.dims.length !== 2) {
    throw new Error(`variable ${variable.name} is not 2-D: [${variable.dims.join("x")}]`);
  }
  const [rows, cols] = variable.dims;
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) {
    const row = new Array<number>(cols);
    for (let c = 0; c < cols; c++) {
      row[c] = variable.data[c * rows + r];
    }
    out.push(row);
  }
  return out;
}
