#!/usr/bin/env node
// Usage: node providerCli.js <request_file> <response_file>
import { lpipsProviderAdapter } from './provider';

function main(): number {
  const [request, response] = process.argv.slice(2);
  if (!request || !response) {
    process.stderr.write('usage: providerCli <request_file> <response_file>\n');
    return 2;
  }
  try {
    lpipsProviderAdapter(request, response);
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
  return 0;
}

process.exit(main());
