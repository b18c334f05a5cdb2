import init, { cliffReport, sweepReport, rolloutReport } from "./pkg/mdp_gamma_demo.js";

const DEFAULTS = {
  LL: [10, 0.9],
  ML: [-10, 0.9],
  MM: [0, 0.875],
  HM: [-2, 0.9],
  HH: [25, 0.5],
};
const SLIPPERY_HH_GAMMA = 1.2;

const $ = (id) => document.getElementById(id);

function buildTable() {
  const body = $("table").querySelector("tbody");
  body.innerHTML = "";
  for (const [pair, [r, g]] of Object.entries(DEFAULTS)) {
    const row = document.createElement("tr");
    row.innerHTML = `<td>${pair}</td>
      <td><input type="number" step="any" data-kind="reward" data-pair="${pair}" value="${r}"></td>
      <td><input type="number" step="any" data-kind="gamma" data-pair="${pair}" value="${g}"></td>`;
    body.appendChild(row);
  }
  body.querySelectorAll("input").forEach((el) => el.addEventListener("change", refresh));
}

function currentTable() {
  const out = { reward: {}, gamma: {}, slippery: $("slippery").checked };
  document.querySelectorAll("#table input").forEach((el) => {
    out[el.dataset.kind][el.dataset.pair] = Number(el.value);
  });
  return JSON.stringify(out);
}

const fmt = (x) => (x === null || x === undefined ? "–" : Number(x.toPrecision(10)).toString());

function call(fn, ...args) {
  try {
    return { ok: JSON.parse(fn(...args)) };
  } catch (e) {
    return { err: e.message || String(e) };
  }
}

function showPolicies() {
  const res = call(cliffReport, currentTable());
  const box = $("policies");
  if (res.err) {
    box.innerHTML = `<p class="err">${res.err}</p>`;
    return;
  }
  const { states, policies, optimal } = res.ok;
  let html = `<table><thead><tr><th>policy</th><th>spectral radius</th>`;
  html += states.map((s) => `<th>U(${s})</th>`).join("") + "</tr></thead><tbody>";
  for (const p of policies) {
    const cls = p.policy === optimal.policy ? "best" : p.admissible ? "" : "bad";
    const us = p.utilities ? p.utilities.map(fmt) : states.map(() => "diverges");
    html += `<tr class="${cls}"><td>${p.policy}</td><td>${fmt(p.spectral_radius)}</td>`;
    html += us.map((u) => `<td>${u}</td>`).join("") + "</tr>";
  }
  html += "</tbody></table>";
  html += optimal.error
    ? `<p class="err">planning failed: ${optimal.error}</p>`
    : `<p>optimal policy ${optimal.policy}</p>`;
  box.innerHTML = html;
}

function axes(ctx, box, xr, yr, xlabel, xlog) {
  const { x0, y0, w, h } = box;
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.strokeRect(x0, y0, w, h);
  const X = (x) => x0 + (w * ((xlog ? Math.log10(x) : x) - xr[0])) / (xr[1] - xr[0]);
  const Y = (y) => y0 + h - (h * (y - yr[0])) / (yr[1] - yr[0]);
  for (let i = 0; i <= 4; i++) {
    const y = yr[0] + ((yr[1] - yr[0]) * i) / 4;
    ctx.fillText(fmt(Number(y.toPrecision(3))), 4, Y(y) + 4);
    const xv = xr[0] + ((xr[1] - xr[0]) * i) / 4;
    const label = xlog ? fmt(Math.round(10 ** xv)) : fmt(Number(xv.toPrecision(3)));
    ctx.fillText(label, X(xlog ? 10 ** xv : xv) - 8, y0 + h + 14);
  }
  ctx.fillText(xlabel, x0 + w - 60, y0 + h + 28);
  return { X, Y };
}

function line(ctx, xs, ys, X, Y, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.lineWidth = 2;
  ctx.beginPath();
  let started = false;
  xs.forEach((x, i) => {
    if (ys[i] === null) return;
    if (started) ctx.lineTo(X(x), Y(ys[i]));
    else ctx.moveTo(X(x), Y(ys[i]));
    started = true;
  });
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.lineWidth = 1;
}

function range(arrays) {
  const vals = arrays.flat().filter((v) => v !== null && Number.isFinite(v));
  let lo = Math.min(...vals);
  let hi = Math.max(...vals);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

function showSweep() {
  const canvas = $("sweep");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const res = call(sweepReport, currentTable(), Number($("points").value));
  if (res.err) {
    $("sweep-note").innerHTML = `<p class="err">${res.err}</p>`;
    return;
  }
  const d = res.ok;
  const series = [
    ["implied R(MM)", d.r_mm, "#1f77b4", []],
    ["implied R(HH)", d.r_hh, "#d62728", []],
    ["v(stay high)", d.v_stay_high, "#d62728", [6, 4]],
    ["v(stay middle)", d.v_stay_middle, "#1f77b4", [6, 4]],
  ];
  const box = { x0: 60, y0: 10, w: canvas.width - 80, h: canvas.height - 50 };
  const { X, Y } = axes(ctx, box, [0, 0.99], range(series.map((s) => s[1])), "γ");
  for (const [, ys, color, dash] of series) line(ctx, d.gamma, ys, X, Y, color, dash);
  $("sweep-legend").innerHTML = series
    .map(([name, , color, dash]) =>
      `<span><span class="swatch" style="background:${color};${dash.length ? "opacity:.5" : ""}"></span>${name}</span>`)
    .join("");
  const withReversal = d.state_reversals.filter((n) => n > 0).length;
  const representable = d.representable.filter(Boolean).length;
  $("sweep-note").innerHTML =
    `<p>state-level preference reversals at ${withReversal} of ${d.gamma.length} grid points; ` +
    `representable at ${representable}.</p>`;
}

function showRollout() {
  const canvas = $("rollout");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const res = call(rolloutReport, currentTable(), Number($("samples").value), Number($("seed").value));
  if (res.err) {
    $("rollout-note").innerHTML = `<p class="err">${res.err}</p>`;
    return;
  }
  const { exact, points, policy, truncated_fraction } = res.ok;
  const ns = points.map((p) => p.samples);
  const mean = points.map((p) => p.mean);
  const hi = points.map((p) => p.mean + 2 * p.std_error);
  const lo = points.map((p) => p.mean - 2 * p.std_error);
  const tail = points.slice(Math.min(3, points.length - 1));
  const yr = range([tail.map((p) => p.mean + 2 * p.std_error), tail.map((p) => p.mean - 2 * p.std_error), [exact]]);
  const xr = [0, Math.max(Math.log10(ns[ns.length - 1]), 1)];
  const box = { x0: 60, y0: 10, w: canvas.width - 80, h: canvas.height - 50 };
  const { X, Y } = axes(ctx, box, xr, yr, "samples", true);
  const clampY = (y) => Y(Math.min(Math.max(y, yr[0]), yr[1]));
  ctx.save();
  ctx.beginPath();
  ctx.rect(box.x0, box.y0, box.w, box.h);
  ctx.clip();
  line(ctx, ns, hi, X, clampY, "#bbb");
  line(ctx, ns, lo, X, clampY, "#bbb");
  line(ctx, ns, mean, X, clampY, "#1f77b4");
  line(ctx, [ns[0], ns[ns.length - 1]], [exact, exact], X, clampY, "#2ca02c", [4, 4]);
  ctx.restore();
  const last = points[points.length - 1];
  $("rollout-note").innerHTML =
    `<p>policy ${policy}: exact U(H) = ${fmt(exact)}, estimate ${fmt(last.mean)} ± ${fmt(last.std_error)} ` +
    `(${fmt(Math.abs(last.mean - exact) / (last.std_error || 1))} SE), truncated ${fmt(truncated_fraction)}</p>`;
}

function refresh() {
  showPolicies();
  showSweep();
  showRollout();
}

await init();
buildTable();
$("slippery").addEventListener("change", () => {
  const hh = document.querySelector('input[data-kind="gamma"][data-pair="HH"]');
  hh.value = $("slippery").checked ? SLIPPERY_HH_GAMMA : DEFAULTS.HH[1];
  refresh();
});
$("reset").addEventListener("click", () => {
  $("slippery").checked = false;
  buildTable();
  refresh();
});
$("points").addEventListener("change", showSweep);
$("run").addEventListener("click", showRollout);
refresh();
