import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // the end-to-end suite generates a corpus, builds an index, and boots
    // the Python service, so hooks need room
    testTimeout: 60_000,
    hookTimeout: 180_000,
  },
});
