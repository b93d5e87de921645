import type { ParsedMesh } from "./types.js";

/** Parse ASCII OBJ text (v / f records; vn and comments ignored).
 *  Faces may be polygons; they are fan-triangulated. Indices may carry
 *  texture/normal slashes (f 1/1/1 ...) and may be negative (relative). */
export function parseObj(text: string): ParsedMesh {
  const vertices: number[] = [];
  const faces: number[] = [];
  const lines = text.split("\n");
  for (let lineno = 0; lineno < lines.length; lineno++) {
    const line = lines[lineno].trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/);
    if (parts[0] === "v") {
      if (parts.length < 4) {
        throw new Error(`malformed vertex at line ${lineno + 1}: ${line}`);
      }
      for (let k = 1; k <= 3; k++) {
        const value = Number(parts[k]);
        if (!Number.isFinite(value)) {
          throw new Error(`bad coordinate at line ${lineno + 1}: ${parts[k]}`);
        }
        vertices.push(value);
      }
    } else if (parts[0] === "f") {
      if (parts.length < 4) {
        throw new Error(`face needs >= 3 vertices at line ${lineno + 1}`);
      }
      const idx = parts.slice(1).map((token) => {
        const raw = Number(token.split("/")[0]);
        if (!Number.isInteger(raw) || raw === 0) {
          throw new Error(`bad face index at line ${lineno + 1}: ${token}`);
        }
        const vertexCount = vertices.length / 3;
        const i = raw > 0 ? raw - 1 : vertexCount + raw;
        if (i < 0 || i >= vertexCount) {
          throw new Error(
            `face index out of range at line ${lineno + 1}: ${raw}`,
          );
        }
        return i;
      });
      for (let k = 1; k + 1 < idx.length; k++) {
        faces.push(idx[0], idx[k], idx[k + 1]);
      }
    }
  }
  return {
    vertices: Float32Array.from(vertices),
    faces: Uint32Array.from(faces),
  };
}

/** Axis-aligned bounds: [center xyz, radius of the bounding sphere]. */
export function meshBounds(mesh: ParsedMesh): {
  center: [number, number, number];
  radius: number;
} {
  const n = mesh.vertices.length / 3;
  if (n === 0) return { center: [0, 0, 0], radius: 1 };
  const lo = [Infinity, Infinity, Infinity];
  const hi = [-Infinity, -Infinity, -Infinity];
  for (let i = 0; i < n; i++) {
    for (let a = 0; a < 3; a++) {
      const v = mesh.vertices[3 * i + a];
      lo[a] = Math.min(lo[a], v);
      hi[a] = Math.max(hi[a], v);
    }
  }
  const center: [number, number, number] = [
    (lo[0] + hi[0]) / 2,
    (lo[1] + hi[1]) / 2,
    (lo[2] + hi[2]) / 2,
  ];
  const radius =
    Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) / 2 || 1;
  return { center, radius };
}
