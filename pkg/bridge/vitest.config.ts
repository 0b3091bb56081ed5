import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // bit-equality tests shell into the core CLI many times
    testTimeout: 120_000,
  },
});
