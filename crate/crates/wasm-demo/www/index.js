import init, { amplitude_surface, evolve_probabilities, coupling_traces } from "./pkg/cavity_gates_wasm.js";

const COLORS = ["#d62728", "#1f77b4", "#2ca02c"];
const LABELS = ["|100⟩", "|010⟩", "|001⟩"];
const SURFACE = { vMin: 150, vMax: 650, nV: 126, pMin: 0, pMax: 1, nP: 101 };

const $ = (id) => document.getElementById(id);

function axes(ctx, w, h, yMin, yMax) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40, 10, w - 50, h - 30);
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.fillText(yMax.toPrecision(3), 2, 18);
  ctx.fillText(yMin.toPrecision(3), 2, h - 20);
}

function plotRows(canvas, rows, width, columns, yMin, yMax) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h, yMin, yMax);
  const n = rows.length / width;
  const t0 = rows[0];
  const t1 = rows[(n - 1) * width];
  const x = (t) => 40 + ((t - t0) / (t1 - t0)) * (w - 50);
  const y = (v) => 10 + (1 - (v - yMin) / (yMax - yMin)) * (h - 30);
  columns.forEach((col, k) => {
    ctx.strokeStyle = COLORS[k];
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const px = x(rows[i * width]);
      const py = y(rows[i * width + col]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
  });
  ctx.fillStyle = "#333";
  ctx.fillText(`t = 0 … ${(t1 * 1e9).toFixed(2)} ns`, w / 2 - 40, h - 4);
}

function heatmap(canvas, values, nV, nP) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nV, nP);
  for (let iv = 0; iv < nV; iv++) {
    for (let ip = 0; ip < nP; ip++) {
      const v = Math.max(-1, Math.min(1, values[iv * nP + ip]));
      const o = ((nP - 1 - ip) * nV + iv) * 4;
      // red positive, blue negative, white at zero
      img.data[o] = v < 0 ? 255 * (1 + v) : 255;
      img.data[o + 1] = 255 * (1 - Math.abs(v));
      img.data[o + 2] = v > 0 ? 255 * (1 - v) : 255;
      img.data[o + 3] = 255;
    }
  }
  const off = new OffscreenCanvas(nV, nP);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function redrawTransit() {
  const v = parseFloat($("velocity").value);
  const p = parseFloat($("ratio").value);
  $("velocity-out").textContent = v.toFixed(1);
  $("ratio-out").textContent = p.toFixed(3);
  try {
    const rows = evolve_probabilities(v, p, $("engine").value === "ode", 600);
    plotRows($("evolution"), rows, 4, [1, 2, 3], 0, 1);
    const last = rows.slice(rows.length - 3);
    $("final").textContent = LABELS.map((l, k) => `${l} ${last[k].toFixed(4)}`).join("   ");
    const traces = coupling_traces(v, p, 600);
    plotRows($("traces"), traces, 3, [1, 2], -11e9, 11e9);
    $("status").textContent = "";
  } catch (e) {
    $("status").textContent = String(e);
  }
}

function redrawSurfaces() {
  const { vMin, vMax, nV, pMin, pMax, nP } = SURFACE;
  const values = amplitude_surface(vMin, vMax, nV, pMin, pMax, nP, $("initial-b").checked);
  heatmap($("surface-a"), values.subarray(0, nV * nP), nV, nP);
  heatmap($("surface-b"), values.subarray(nV * nP), nV, nP);
}

await init();
for (const id of ["velocity", "ratio", "engine"]) $(id).addEventListener("input", redrawTransit);
$("initial-b").addEventListener("change", redrawSurfaces);
redrawTransit();
redrawSurfaces();
