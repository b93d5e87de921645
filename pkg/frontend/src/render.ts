import type { ParsedMesh } from "./types.js";

export interface OrbitState {
  /** azimuth, radians */
  theta: number;
  /** elevation, radians, clamped to (-pi/2, pi/2) */
  phi: number;
  /** distance from target, world units */
  distance: number;
  target: [number, number, number];
}

const PHI_LIMIT = Math.PI / 2 - 1e-3;

export function orbitRotate(
  state: OrbitState,
  dTheta: number,
  dPhi: number,
): OrbitState {
  return {
    ...state,
    theta: state.theta + dTheta,
    phi: Math.max(-PHI_LIMIT, Math.min(PHI_LIMIT, state.phi + dPhi)),
  };
}

export function orbitZoom(state: OrbitState, factor: number): OrbitState {
  return { ...state, distance: Math.max(1e-6, state.distance * factor) };
}

export function cameraPosition(state: OrbitState): [number, number, number] {
  const c = Math.cos(state.phi);
  return [
    state.target[0] + state.distance * c * Math.sin(state.theta),
    state.target[1] + state.distance * Math.sin(state.phi),
    state.target[2] + state.distance * c * Math.cos(state.theta),
  ];
}

/** World point -> [screen x px, screen y px, camera depth]. */
export function projectPoint(
  p: [number, number, number],
  state: OrbitState,
  width: number,
  height: number,
  fov = Math.PI / 4,
): [number, number, number] {
  const eye = cameraPosition(state);
  // camera basis: z toward the target, y up-ish
  const zAxis = normalize([
    state.target[0] - eye[0],
    state.target[1] - eye[1],
    state.target[2] - eye[2],
  ]);
  const xAxis = normalize(cross([0, 1, 0], zAxis));
  const yAxis = cross(zAxis, xAxis);
  const d: [number, number, number] = [
    p[0] - eye[0],
    p[1] - eye[1],
    p[2] - eye[2],
  ];
  const cx = dot(d, xAxis);
  const cy = dot(d, yAxis);
  const cz = dot(d, zAxis);
  const f = height / 2 / Math.tan(fov / 2);
  return [width / 2 - (f * cx) / cz, height / 2 - (f * cy) / cz, cz];
}

function normalize(v: [number, number, number]): [number, number, number] {
  const n = Math.hypot(v[0], v[1], v[2]) || 1;
  return [v[0] / n, v[1] / n, v[2] / n];
}

function cross(
  a: [number, number, number],
  b: [number, number, number],
): [number, number, number] {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function dot(a: [number, number, number], b: [number, number, number]): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

interface DrawableFace {
  px: [number, number][];
  depth: number;
  shade: number;
  color: [number, number, number];
}

export interface MeshStyle {
  color: [number, number, number];
  /** vertex indices tinted with the highlight color (penetration mask) */
  highlight?: Set<number>;
  highlightColor?: [number, number, number];
}

/** Depth-sort faces of several meshes for painter's-algorithm drawing. */
export function buildFaceList(
  meshes: { mesh: ParsedMesh; style: MeshStyle }[],
  state: OrbitState,
  width: number,
  height: number,
): DrawableFace[] {
  const out: DrawableFace[] = [];
  const eye = cameraPosition(state);
  for (const { mesh, style } of meshes) {
    const n = mesh.vertices.length / 3;
    const projected: [number, number, number][] = new Array(n);
    for (let i = 0; i < n; i++) {
      projected[i] = projectPoint(
        [mesh.vertices[3 * i], mesh.vertices[3 * i + 1], mesh.vertices[3 * i + 2]],
        state,
        width,
        height,
      );
    }
    for (let f = 0; f < mesh.faces.length; f += 3) {
      const ids = [mesh.faces[f], mesh.faces[f + 1], mesh.faces[f + 2]];
      const pts = ids.map(
        (i) =>
          [
            mesh.vertices[3 * i],
            mesh.vertices[3 * i + 1],
            mesh.vertices[3 * i + 2],
          ] as [number, number, number],
      );
      const scr = ids.map((i) => projected[i]);
      if (scr.some((s) => s[2] <= 1e-9)) continue; // behind the camera
      const normal = cross(
        [pts[1][0] - pts[0][0], pts[1][1] - pts[0][1], pts[1][2] - pts[0][2]],
        [pts[2][0] - pts[0][0], pts[2][1] - pts[0][1], pts[2][2] - pts[0][2]],
      );
      const view = normalize([
        eye[0] - pts[0][0],
        eye[1] - pts[0][1],
        eye[2] - pts[0][2],
      ]);
      const shade =
        0.35 + 0.65 * Math.abs(dot(normalize(normal), view));
      const highlighted =
        style.highlight && ids.some((i) => style.highlight!.has(i));
      out.push({
        px: scr.map((s) => [s[0], s[1]] as [number, number]),
        depth: (scr[0][2] + scr[1][2] + scr[2][2]) / 3,
        shade,
        color: highlighted
          ? (style.highlightColor ?? [220, 60, 60])
          : style.color,
      });
    }
  }
  out.sort((a, b) => b.depth - a.depth); // far to near
  return out;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  faces: DrawableFace[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  for (const face of faces) {
    const [r, g, b] = face.color.map((c) => Math.round(c * face.shade));
    ctx.fillStyle = `rgb(${r},${g},${b})`;
    ctx.strokeStyle = ctx.fillStyle;
    ctx.beginPath();
    ctx.moveTo(face.px[0][0], face.px[0][1]);
    ctx.lineTo(face.px[1][0], face.px[1][1]);
    ctx.lineTo(face.px[2][0], face.px[2][1]);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }
}
