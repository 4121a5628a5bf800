import { defineConfig } from 'vite';

export default defineConfig({
  // served from /app/ by the API server; relative base keeps assets working
  base: './',
  build: { outDir: 'dist' },
});
