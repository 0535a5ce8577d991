import init, { circle_patch, conditions, chart_probe } from "./pkg/frobkit_wasm.js";

const $ = (id) => document.getElementById(id);

function drawCircle() {
  const extent = parseFloat($("extent").value);
  const step = parseFloat($("step").value);
  $("extent-val").textContent = extent.toFixed(2);
  const canvas = $("circle");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  let patch;
  try {
    patch = JSON.parse(circle_patch(extent, 121, step));
  } catch (e) {
    $("circle-info").textContent = String(e);
    return;
  }

  const sx = (x) => canvas.width / 2 + x * 180;
  const sy = (y) => canvas.height - 40 - y * 220;

  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  for (let t = 0; t <= Math.PI; t += 0.02) {
    const p = [Math.cos(t), Math.sin(t)];
    t === 0 ? ctx.moveTo(sx(p[0]), sy(p[1])) : ctx.lineTo(sx(p[0]), sy(p[1]));
  }
  ctx.stroke();

  ctx.fillStyle = "#2456c7";
  patch.x.forEach((x, i) => {
    const y = patch.y[i];
    if (y !== null) ctx.fillRect(sx(x) - 1.5, sy(y) - 1.5, 3, 3);
  });

  $("circle-info").textContent =
    `max |y − √(1 − x²)| = ${patch.max_error.toExponential(2)}` +
    (patch.breaches ? `, ${patch.breaches} breach(es): the family stops being a complement of E* at the equator` : "");
}

function updateConditions() {
  const t = ["t11", "t12", "t21", "t22"].map((id) => parseFloat($(id).value) || 0);
  const table = $("conditions");
  table.innerHTML = "";
  let view;
  try {
    view = JSON.parse(conditions(new Float64Array([1, 0, 0, 0]), new Float64Array(t)));
  } catch (e) {
    $("conditions-info").textContent = String(e);
    return;
  }
  for (const [name, holds] of view.holds) {
    const row = table.insertRow();
    row.insertCell().textContent = `(${name})`;
    const cell = row.insertCell();
    cell.textContent = holds ? "holds" : "fails";
    cell.className = holds ? "yes" : "no";
  }
  $("conditions-info").textContent =
    `rank A = ${view.rank_a}, rank T = ${view.rank_t}; conditions ${view.agree ? "agree" : "disagree"}`;
}

function probe() {
  const [m, n, k, seed] = ["m", "n", "k", "seed"].map((id) => parseInt($(id).value, 10));
  try {
    $("chart-out").textContent = JSON.stringify(JSON.parse(chart_probe(m, n, k, 50, BigInt(seed))), null, 2);
  } catch (e) {
    $("chart-out").textContent = String(e);
  }
}

await init();
$("extent").addEventListener("input", drawCircle);
$("step").addEventListener("change", drawCircle);
["t11", "t12", "t21", "t22"].forEach((id) => $(id).addEventListener("input", updateConditions));
$("probe").addEventListener("click", probe);
drawCircle();
updateConditions();
probe();
