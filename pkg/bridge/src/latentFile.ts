import * as fs from 'fs';

export interface BridgeBatch {
  /** Flat row-major values, batchSize * channels * height * width long. */
  data: Float32Array;
  batchSize: number;
  channels: number;
  height: number;
  width: number;
  /** Hex config fingerprint from the DLT1 header; null for npy sidecars. */
  fingerprint: string | null;
}

export class LatentFormatError extends Error {}
export class BadMagicError extends LatentFormatError {}
export class TruncatedFileError extends LatentFormatError {}
export class CountMismatchError extends LatentFormatError {}

const MAGIC = 'DLT1';
// magic(4) + version u16 + C/H/W u32 + count u64 + fingerprint(32), little-endian
const HEADER_SIZE = 58;

const NPY_MAGIC = Buffer.from('\x93NUMPY', 'latin1');

function toFloat32(payload: Buffer): Float32Array {
  // copy so the view is aligned and detached from the file buffer
  const copy = new ArrayBuffer(payload.length);
  payload.copy(Buffer.from(copy));
  return new Float32Array(copy);
}

export function loadDlt(path: string): BridgeBatch {
  const buf = fs.readFileSync(path);
  if (buf.length < HEADER_SIZE) {
    throw new TruncatedFileError(`${path}: file shorter than the ${HEADER_SIZE}-byte header`);
  }
  const magic = buf.toString('latin1', 0, 4);
  if (magic !== MAGIC) {
    throw new BadMagicError(`${path}: bad magic ${JSON.stringify(magic)}, expected ${MAGIC}`);
  }
  const channels = buf.readUInt32LE(6);
  const height = buf.readUInt32LE(10);
  const width = buf.readUInt32LE(14);
  const count = Number(buf.readBigUInt64LE(18));
  const fingerprint = buf.toString('hex', 26, 58);
  const size = channels * height * width;
  if (size === 0 || count % size !== 0) {
    throw new CountMismatchError(
      `${path}: element count ${count} not a multiple of tensor size ${size}`
    );
  }
  const expected = HEADER_SIZE + 4 * count;
  if (buf.length < expected) {
    throw new TruncatedFileError(`${path}: payload truncated (${buf.length} < ${expected} bytes)`);
  }
  if (buf.length > expected) {
    throw new CountMismatchError(`${path}: trailing bytes after payload (${buf.length} > ${expected})`);
  }
  return {
    data: toFloat32(buf.subarray(HEADER_SIZE, expected)),
    batchSize: count / size,
    channels,
    height,
    width,
    fingerprint,
  };
}

export function loadNpy(path: string): BridgeBatch {
  const buf = fs.readFileSync(path);
  if (buf.length < 10) {
    throw new TruncatedFileError(`${path}: file shorter than the npy preamble`);
  }
  if (!buf.subarray(0, 6).equals(NPY_MAGIC)) {
    throw new BadMagicError(`${path}: not an npy file`);
  }
  const major = buf[6];
  const headerLen = major >= 2 ? buf.readUInt32LE(8) : buf.readUInt16LE(8);
  const headerEnd = (major >= 2 ? 12 : 10) + headerLen;
  const header = buf.toString('latin1', major >= 2 ? 12 : 10, headerEnd);
  if (!/'descr':\s*'<f4'/.test(header)) {
    throw new LatentFormatError(`${path}: expected little-endian float32, got header ${header.trim()}`);
  }
  if (!/'fortran_order':\s*False/.test(header)) {
    throw new LatentFormatError(`${path}: fortran-ordered arrays are not supported`);
  }
  const shapeMatch = header.match(/'shape':\s*\(([^)]*)\)/);
  const dims = shapeMatch
    ? shapeMatch[1].split(',').map((s) => s.trim()).filter(Boolean).map(Number)
    : [];
  if (dims.length !== 4 || dims.some((d) => !Number.isInteger(d) || d <= 0)) {
    throw new LatentFormatError(`${path}: expected a (B, C, H, W) shape, got (${dims.join(', ')})`);
  }
  const [batchSize, channels, height, width] = dims;
  const count = batchSize * channels * height * width;
  const expected = headerEnd + 4 * count;
  if (buf.length < expected) {
    throw new TruncatedFileError(`${path}: payload truncated (${buf.length} < ${expected} bytes)`);
  }
  return {
    data: toFloat32(buf.subarray(headerEnd, expected)),
    batchSize,
    channels,
    height,
    width,
    fingerprint: null,
  };
}

/** Load a latent batch from either container, sniffed by magic bytes. */
export function bridgeLoad(path: string): BridgeBatch {
  const fd = fs.openSync(path, 'r');
  const head = Buffer.alloc(6);
  try {
    fs.readSync(fd, head, 0, 6, 0);
  } finally {
    fs.closeSync(fd);
  }
  if (head.toString('latin1', 0, 4) === MAGIC) return loadDlt(path);
  if (head.equals(NPY_MAGIC)) return loadNpy(path);
  throw new BadMagicError(`${path}: unrecognized magic bytes`);
}
