import { CurationApi } from "./api.js";
import { CandidateModel, DEFAULT_QUERY, ListQuery, SortKey, selectPage } from "./model.js";
import { meshBounds, parseObj } from "./obj.js";
import {
  OrbitState,
  buildFaceList,
  drawScene,
  orbitRotate,
  orbitZoom,
} from "./render.js";
import type { CandidateStatus, MeshPayload, MutableStatus } from "./types.js";

const api = new CurationApi("");
const model = new CandidateModel(api);
let query: ListQuery = { ...DEFAULT_QUERY };
let selectedId: string | null = null;

const grid = document.getElementById("grid") as HTMLDivElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const pager = document.getElementById("pager") as HTMLDivElement;
const inspector = document.getElementById("inspector") as HTMLDivElement;
const canvas = document.getElementById("viewer") as HTMLCanvasElement;
const inspectorTitle = document.getElementById("inspector-title") as HTMLElement;

function showBanner(message: string, retry?: () => void): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
  if (retry) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.onclick = () => {
      banner.classList.add("hidden");
      retry();
    };
    banner.append(" ", button);
  }
}

function statusBadge(status: CandidateStatus): string {
  return `<span class="badge badge-${status}">${status}</span>`;
}

function renderGrid(): void {
  const page = selectPage(model.all(), query);
  grid.innerHTML = "";
  if (page.total === 0) {
    grid.innerHTML = `<p class="empty">No candidates${
      query.statusFilter === "all" ? "" : ` with status ${query.statusFilter}`
    }.</p>`;
  }
  for (const card of page.cards) {
    const el = document.createElement("div");
    el.className = "card" + (card.id === selectedId ? " selected" : "");
    const zeroContact = card.scores.contactVertexCount === 0;
    el.innerHTML = `
      <h3>${card.id} ${statusBadge(card.status)}</h3>
      <p>penetration: ${card.scores.penetrationVolumeCm3.toFixed(3)} cm&sup3;</p>
      <p>contacts: ${card.scores.contactVertexCount}${
        zeroContact ? ' <span class="flag">no contact</span>' : ""
      }</p>`;
    el.onclick = () => openInspector(card.id);
    grid.append(el);
  }
  pager.textContent = `page ${page.page + 1} / ${page.pageCount} (${page.total} candidates)`;
}

async function refresh(): Promise<void> {
  try {
    await model.refresh();
    renderGrid();
  } catch {
    showBanner("Curation service unreachable.", () => void refresh());
  }
}

// ---- inspector -------------------------------------------------------------

let orbit: OrbitState = {
  theta: 0.6,
  phi: 0.3,
  distance: 1,
  target: [0, 0, 0],
};
let scene: { payload: MeshPayload } | null = null;

function redraw(): void {
  if (!scene) return;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const hand = parseObj(scene.payload.handObj);
  const object = parseObj(scene.payload.objectObj);
  const faces = buildFaceList(
    [
      {
        mesh: object,
        style: { color: [110, 140, 210] },
      },
      {
        mesh: hand,
        style: {
          color: [225, 190, 160],
          highlight: new Set(scene.payload.objectInsideMask),
          highlightColor: [220, 60, 60],
        },
      },
    ],
    orbit,
    canvas.width,
    canvas.height,
  );
  drawScene(ctx, faces, canvas.width, canvas.height);
}

async function openInspector(id: string): Promise<void> {
  selectedId = id;
  renderGrid();
  inspector.classList.remove("hidden");
  inspectorTitle.textContent = id;
  try {
    const payload = await api.candidateMesh(id);
    scene = { payload };
    const bounds = meshBounds(parseObj(payload.handObj));
    orbit = {
      theta: 0.6,
      phi: 0.3,
      distance: bounds.radius * 3,
      target: bounds.center,
    };
    const count = payload.objectInsideMask.length;
    (document.getElementById("inspector-info") as HTMLElement).textContent =
      count > 0
        ? `${count} hand vertices inside the object (highlighted)`
        : "no interpenetrating vertices";
    redraw();
  } catch {
    scene = null;
    (document.getElementById("inspector-info") as HTMLElement).textContent =
      "mesh fetch failed for this candidate";
  }
}

async function decideSelected(status: MutableStatus): Promise<void> {
  if (!selectedId) return;
  const outcome = await model.decide(selectedId, status);
  if (outcome.kind === "gone") {
    showBanner(`${selectedId} no longer exists; removed.`);
    selectedId = null;
    inspector.classList.add("hidden");
  }
  // server truth always wins: re-fetch and re-render
  await refresh();
}

// ---- wiring ----------------------------------------------------------------

let dragging = false;
let last: [number, number] = [0, 0];
canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  last = [e.clientX, e.clientY];
});
window.addEventListener("pointerup", () => (dragging = false));
window.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  orbit = orbitRotate(
    orbit,
    -(e.clientX - last[0]) * 0.01,
    (e.clientY - last[1]) * 0.01,
  );
  last = [e.clientX, e.clientY];
  redraw();
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  orbit = orbitZoom(orbit, e.deltaY > 0 ? 1.1 : 1 / 1.1);
  redraw();
});

window.addEventListener("keydown", (e) => {
  if (e.target instanceof HTMLInputElement) return;
  if (e.key === "a") void decideSelected("accepted");
  if (e.key === "r") void decideSelected("rejected");
  if (e.key === "t") void decideSelected("template");
});

(document.getElementById("sort") as HTMLSelectElement).onchange = (e) => {
  query = { ...query, sortKey: (e.target as HTMLSelectElement).value as SortKey, page: 0 };
  renderGrid();
};
(document.getElementById("order") as HTMLSelectElement).onchange = (e) => {
  query = { ...query, ascending: (e.target as HTMLSelectElement).value === "asc", page: 0 };
  renderGrid();
};
(document.getElementById("filter") as HTMLSelectElement).onchange = (e) => {
  query = {
    ...query,
    statusFilter: (e.target as HTMLSelectElement).value as ListQuery["statusFilter"],
    page: 0,
  };
  renderGrid();
};
(document.getElementById("prev") as HTMLButtonElement).onclick = () => {
  query = { ...query, page: query.page - 1 };
  renderGrid();
};
(document.getElementById("next") as HTMLButtonElement).onclick = () => {
  query = { ...query, page: query.page + 1 };
  renderGrid();
};
for (const status of ["accepted", "rejected", "template"] as const) {
  (document.getElementById(`btn-${status}`) as HTMLButtonElement).onclick =
    () => void decideSelected(status);
}

void refresh();
