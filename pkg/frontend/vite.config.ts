import { defineConfig } from "vitest/config";

// The explorer is a static bundle; during development, API calls are
// proxied to a locally running `foodshock serve`.
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
