import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        environment: "jsdom",
        include: ["tests/**/*.test.ts"],
        testTimeout: 30_000,
        hookTimeout: 40_000,
        // the integration suite shares one live service; keep files serial
        fileParallelism: false,
    },
});
