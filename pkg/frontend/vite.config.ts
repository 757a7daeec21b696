import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      "/api": "http://127.0.0.1:8040",
    },
  },
  preview: {
    port: 5173,
    proxy: {
      "/api": "http://127.0.0.1:8040",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
