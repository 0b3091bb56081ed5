import * as fs from 'fs';

import { PNG } from 'pngjs';
import { ssim } from 'ssim.js';

export class ProviderError extends Error {}

interface DecodedImage {
  data: Uint8ClampedArray;
  width: number;
  height: number;
}

function decodePng(path: string): DecodedImage {
  let png: PNG;
  try {
    png = PNG.sync.read(fs.readFileSync(path));
  } catch (err) {
    throw new ProviderError(`cannot decode image ${path}: ${err}`);
  }
  return {
    data: new Uint8ClampedArray(png.data.buffer, png.data.byteOffset, png.data.length),
    width: png.width,
    height: png.height,
  };
}

/** Perceptual distance between two PNGs as 1 - SSIM; 0 for identical images. */
export function imageDistance(pathA: string, pathB: string): number {
  const a = decodePng(pathA);
  const b = decodePng(pathB);
  if (a.width !== b.width || a.height !== b.height) {
    throw new ProviderError(
      `image sizes differ: ${pathA} is ${a.width}x${a.height}, ${pathB} is ${b.width}x${b.height}`
    );
  }
  return 1 - ssim(a, b).mssim;
}

/**
 * Distance-provider adapter over the external command contract: reads
 * tab-separated image path pairs from `requestPath` and writes one decimal
 * distance per line to `responsePath`, in order.
 */
export function lpipsProviderAdapter(requestPath: string, responsePath: string): void {
  const lines = fs
    .readFileSync(requestPath, 'utf8')
    .split('\n')
    .filter((line) => line.trim() !== '');
  const out: string[] = [];
  for (const line of lines) {
    const parts = line.split('\t');
    if (parts.length !== 2) {
      throw new ProviderError(`malformed request line: ${JSON.stringify(line)}`);
    }
    out.push(imageDistance(parts[0], parts[1]).toString());
  }
  fs.writeFileSync(responsePath, out.join('\n') + '\n');
}
