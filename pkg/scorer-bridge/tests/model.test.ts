import { describe, expect, test } from "vitest";

import { ByteContextModel, loadModel } from "../src/model.js";

describe("byte context model", () => {
  test("is deterministic", () => {
    const a = new ByteContextModel().meanNll("some context here", "a target sentence");
    const b = new ByteContextModel().meanNll("some context here", "a target sentence");
    expect(a).toEqual(b);
  });

  test("every conditional is a proper distribution over bytes", () => {
    // exp(-nll) of a one-byte target is exactly p(byte | context), so the
    // 256 values must sum to one
    const context = new TextEncoder().encode("the quick brown fox jumps over it again and again");
    for (const order of [0, 1, 3]) {
      const model = new ByteContextModel(order);
      let total = 0;
      for (let byte = 0; byte < 256; byte++) {
        const { meanNll, tokenCount } = model.meanNllBytes(context, new Uint8Array([byte]));
        expect(tokenCount).toBe(1);
        total += Math.exp(-meanNll);
      }
      expect(Math.abs(total - 1)).toBeLessThan(1e-9);
    }
  });

  test("mean NLL is strictly positive", () => {
    const { meanNll } = new ByteContextModel().meanNll("aaaa aaaa aaaa", "aaaa");
    expect(meanNll).toBeGreaterThan(0);
  });

  test("a context containing the target lowers NLL", () => {
    const target = "the striped cat leaps across seven crates";
    const containing = `observation: ${target}. end.`;
    const unrelated = "observation: a dog sleeps by the door. end.";
    const model = new ByteContextModel();
    const withHelp = model.meanNll(containing, target).meanNll;
    const without = model.meanNll(unrelated, target).meanNll;
    expect(withHelp).toBeLessThan(without);
  });

  test("token count is the UTF-8 byte length", () => {
    const { tokenCount } = new ByteContextModel().meanNll("", "héllo");
    expect(tokenCount).toBe(6);
  });

  test("empty target is rejected", () => {
    expect(() => new ByteContextModel().meanNll("context", "")).toThrow(/zero tokens/);
  });

  test("loadModel knows ppm and rejects the rest", () => {
    expect(loadModel("ppm", 3, 1).scorerId).toBe("ppm-bytes-o3-a1-v1");
    expect(() => loadModel("llama", 3, 1)).toThrow(/unknown model/);
  });

  test("constructor validates order and alpha", () => {
    expect(() => new ByteContextModel(-1)).toThrow(/order/);
    expect(() => new ByteContextModel(3, 0)).toThrow(/alpha/);
  });
});
