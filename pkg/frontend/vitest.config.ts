import { defineConfig } from "vitest/config";

// Source files import each other with browser-style ".js" suffixes; map
// those back onto the ".ts" sources when vitest resolves them.
export default defineConfig({
  resolve: {
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: "$1" }],
  },
  test: {
    include: ["tests/**/*.test.ts"],
  },
});
