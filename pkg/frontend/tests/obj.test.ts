import { describe, expect, it } from "vitest";

import { meshBounds, parseObj } from "../src/obj.js";

const CUBE = `
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 2 3
f 1 3 4
f 5 7 6
f 5 8 7
f 1 5 6
f 1 6 2
f 2 6 7
f 2 7 3
f 3 7 8
f 3 8 4
f 4 8 5
f 4 5 1
`;

describe("parseObj", () => {
  it("parses a triangulated cube", () => {
    const mesh = parseObj(CUBE);
    expect(mesh.vertices.length).toBe(24);
    expect(mesh.faces.length).toBe(36);
    expect(Math.max(...mesh.faces)).toBe(7);
  });

  it("fan-triangulates quads", () => {
    const mesh = parseObj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    expect(mesh.faces).toEqual(Uint32Array.from([0, 1, 2, 0, 2, 3]));
  });

  it("handles slash-delimited and negative indices", () => {
    const mesh = parseObj(
      "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 -2//1 -1//1\n",
    );
    expect(mesh.faces).toEqual(Uint32Array.from([0, 1, 2]));
  });

  it("rejects malformed vertices with a line number", () => {
    expect(() => parseObj("v 0 0\n")).toThrow(/line 1/);
  });

  it("rejects out-of-range face indices", () => {
    expect(() => parseObj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")).toThrow(
      /out of range/,
    );
  });

  it("ignores comments and blank lines", () => {
    const mesh = parseObj("\n# nothing\n\nv 1 2 3\n");
    expect(mesh.vertices).toEqual(Float32Array.from([1, 2, 3]));
  });
});

describe("meshBounds", () => {
  it("centers the unit cube", () => {
    const { center, radius } = meshBounds(parseObj(CUBE));
    expect(center).toEqual([0.5, 0.5, 0.5]);
    expect(radius).toBeCloseTo(Math.sqrt(3) / 2, 10);
  });

  it("survives an empty mesh", () => {
    expect(meshBounds(parseObj("")).radius).toBe(1);
  });
});
