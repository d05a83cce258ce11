import init, { GridDemo, regularization_paths, planted_modules } from "./pkg/netguide_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function fail(e) {
  $("error").textContent = String(e);
}

// SConES on a lattice

let grid = null;

function rebuildGrid() {
  const side = parseInt($("side").value, 10);
  if (grid) grid.free();
  grid = new GridDemo(side, 200, Math.max(4, Math.round(side * side / 25)), num("effect"), parseInt($("grid-seed").value, 10) || 0);
  solveGrid();
}

function solveGrid() {
  const q = grid.scale();
  const eta = q * 10 ** num("eta");
  const lambda = q * 10 ** num("lambda");
  $("effect-v").textContent = num("effect").toFixed(2);
  $("eta-v").textContent = eta.toPrecision(3);
  $("lambda-v").textContent = lambda.toPrecision(3);
  const s = JSON.parse(grid.solve(eta, lambda));
  drawGrid(s);
  $("grid-stats").textContent = `${s.selected.length} selected, F1 ${s.f1.toFixed(3)}, objective ${s.objective.toPrecision(4)}`;
}

function drawGrid(s) {
  const c = $("grid");
  const ctx = c.getContext("2d");
  const cell = c.width / s.side;
  const top = Math.max(...s.relevance);
  const selected = new Set(s.selected);
  const planted = new Set(s.planted);
  ctx.clearRect(0, 0, c.width, c.height);
  s.relevance.forEach((r, p) => {
    const x = (p % s.side) * cell;
    const y = Math.floor(p / s.side) * cell;
    if (selected.has(p)) {
      ctx.fillStyle = "#2b6cb0";
    } else {
      const g = Math.round(255 - 150 * Math.sqrt(Math.max(r, 0) / top));
      ctx.fillStyle = `rgb(${g},${g},${g})`;
    }
    ctx.fillRect(x + 1, y + 1, cell - 2, cell - 2);
    if (planted.has(p)) {
      ctx.strokeStyle = "#d33";
      ctx.lineWidth = 2;
      ctx.strokeRect(x + 2, y + 2, cell - 4, cell - 4);
    }
  });
}

// lasso and Grace paths

function drawPath(canvas, lambdas, betas, planted) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const lo = Math.log10(lambdas[lambdas.length - 1]), hi = Math.log10(lambdas[0]);
  let range = 0;
  for (const b of betas) for (const v of b) range = Math.max(range, Math.abs(v));
  range = range || 1;
  const px = (l) => pad + (w - 2 * pad) * (hi - Math.log10(l)) / (hi - lo);
  const py = (v) => h / 2 - (h / 2 - pad) * v / range;
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(pad, py(0));
  ctx.lineTo(w - pad, py(0));
  ctx.stroke();
  const m = betas[0].length;
  const isPlanted = new Set(planted);
  for (let p = 0; p < m; p++) {
    ctx.strokeStyle = isPlanted.has(p) ? "#d33" : "#999";
    ctx.lineWidth = isPlanted.has(p) ? 1.8 : 1;
    ctx.beginPath();
    lambdas.forEach((l, i) => (i ? ctx.lineTo(px(l), py(betas[i][p])) : ctx.moveTo(px(l), py(betas[i][p]))));
    ctx.stroke();
  }
  ctx.fillStyle = "#555";
  ctx.fillText("λ max", pad, h - 8);
  ctx.fillText("λ max / 100", w - pad - 60, h - 8);
}

function updatePaths() {
  const lambda2 = 10 ** num("lambda2");
  $("lambda2-v").textContent = lambda2.toPrecision(3);
  const p = JSON.parse(regularization_paths(60, 36, 6, 0.6, lambda2, 4));
  drawPath($("lasso"), p.lambdas, p.lasso, p.planted);
  drawPath($("grace"), p.lambdas, p.grace, p.planted);
}

// module search

function updateModules() {
  $("r-v").textContent = num("r").toFixed(2);
  $("noise-v").textContent = num("noise").toFixed(2);
  const v = JSON.parse(planted_modules(30, 0.1, 4, 4, num("noise"), num("r"), parseInt($("mod-seed").value, 10) || 0));
  const c = $("modules");
  const ctx = c.getContext("2d");
  const R = c.width / 2 - 30;
  const pos = (i) => [c.width / 2 + R * Math.cos((2 * Math.PI * i) / v.n_nodes), c.height / 2 + R * Math.sin((2 * Math.PI * i) / v.n_nodes)];
  const topModule = new Set(v.modules.length ? v.modules[0][0] : []);
  const clique = new Set(v.clique);
  ctx.clearRect(0, 0, c.width, c.height);
  for (const [a, b] of v.edges) {
    const inside = topModule.has(a) && topModule.has(b);
    ctx.strokeStyle = inside ? "#2b6cb0" : "#ddd";
    ctx.lineWidth = inside ? 2.5 : 1;
    ctx.beginPath();
    ctx.moveTo(...pos(a));
    ctx.lineTo(...pos(b));
    ctx.stroke();
  }
  v.z.forEach((z, i) => {
    const [x, y] = pos(i);
    const t = Math.max(0, Math.min(1, (z + 2) / 6));
    ctx.fillStyle = topModule.has(i) ? "#2b6cb0" : `rgb(${Math.round(230 - 130 * t)},${Math.round(230 - 130 * t)},${Math.round(230 - 130 * t)})`;
    ctx.beginPath();
    ctx.arc(x, y, 9, 0, 2 * Math.PI);
    ctx.fill();
    if (clique.has(i)) {
      ctx.strokeStyle = "#d33";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    ctx.fillStyle = "#222";
    ctx.fillText(z.toFixed(1), x + 11, y + 4);
  });
  $("module-list").innerHTML = v.modules
    .map(([genes, score]) => `<li>${score.toFixed(3)}: {${genes.join(", ")}}</li>`)
    .join("");
}

function guard(f) {
  return () => {
    try {
      $("error").textContent = "";
      f();
    } catch (e) {
      fail(e);
    }
  };
}

await init();
for (const id of ["side", "effect", "grid-seed"]) $(id).addEventListener("change", guard(rebuildGrid));
$("effect").addEventListener("input", () => ($("effect-v").textContent = num("effect").toFixed(2)));
for (const id of ["eta", "lambda"]) $(id).addEventListener("input", guard(solveGrid));
$("lambda2").addEventListener("input", guard(updatePaths));
for (const id of ["r", "noise"]) $(id).addEventListener("input", guard(updateModules));
$("mod-seed").addEventListener("change", guard(updateModules));
guard(rebuildGrid)();
guard(updatePaths)();
guard(updateModules)();
