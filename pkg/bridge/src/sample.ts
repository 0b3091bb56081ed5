import { execFileSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { BridgeBatch, loadDlt } from './latentFile';

export interface SampleConfig {
  strategy?: string;
  preset?: string;
  batch_size: number;
  seed?: number;
  d_min?: number;
  n_max?: number;
  pool_kernel?: number;
  attempt_budget?: number;
  shape?: [number, number, number];
}

export class SampleError extends Error {
  constructor(message: string, public readonly exitCode: number | null) {
    super(message);
  }
}

const DEFAULT_CLI = ['python3', '-m', 'diverse_latents.cli'];

function coreCommand(): string[] {
  const override = process.env.DIVLAT_CLI;
  return override ? override.split(/\s+/) : DEFAULT_CLI;
}

function configArgs(config: SampleConfig, outDir: string): string[] {
  const args = ['sample', '--out-dir', outDir, '-B', String(config.batch_size)];
  if (config.strategy !== undefined) args.push('--strategy', config.strategy);
  if (config.preset !== undefined) args.push('--preset', config.preset);
  if (config.seed !== undefined) args.push('--seed', String(config.seed));
  if (config.d_min !== undefined) args.push('--d-min', String(config.d_min));
  if (config.n_max !== undefined) args.push('--n-max', String(config.n_max));
  if (config.pool_kernel !== undefined) args.push('--pool-kernel', String(config.pool_kernel));
  if (config.attempt_budget !== undefined) {
    args.push('--attempt-budget', String(config.attempt_budget));
  }
  if (config.shape !== undefined) args.push('--shape', ...config.shape.map(String));
  return args;
}

/**
 * Sample a latent batch by shelling into the core CLI; the returned values
 * are bit-identical to the core's latent file for the same config.
 *
 * Pass `outDir` to keep the CLI artifacts (latents.dlt, .npy, trace.json);
 * by default they land in a temp directory that is removed after loading.
 */
export function bridgeSample(config: SampleConfig, outDir?: string): BridgeBatch {
  const dir = outDir ?? fs.mkdtempSync(path.join(os.tmpdir(), 'bridge-sample-'));
  const [cmd, ...prefix] = coreCommand();
  try {
    try {
      execFileSync(cmd, [...prefix, ...configArgs(config, dir)], { stdio: ['ignore', 'ignore', 'pipe'] });
    } catch (err: any) {
      const stderr = err.stderr ? err.stderr.toString().trim() : String(err);
      throw new SampleError(stderr, err.status ?? null);
    }
    return loadDlt(path.join(dir, 'latents.dlt'));
  } finally {
    if (outDir === undefined) fs.rmSync(dir, { recursive: true, force: true });
  }
}
