import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'happy-dom',
    // The app serves on port 5000; running the DOM at that origin means
    // the live-node tests also exercise the node's CORS allowance for it.
    environmentOptions: { happyDOM: { url: 'http://localhost:5000' } },
    include: ['tests/**/*.test.ts'],
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
