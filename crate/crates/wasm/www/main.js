import init, { simulate_play, worked_example, value_window } from "./pkg/fractackle_wasm.js";

const $ = (id) => document.getElementById(id);
const fmt = (v) => (v === null || v === undefined ? "-" : Number(v).toFixed(3));

function draw(canvas, play) {
  const ctx = canvas.getContext("2d");
  const { width: W, height: H } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, W, H);
  const n = play.frames.length;
  const vMax = Math.max(1, ...play.vToward);
  const vMin = Math.min(0, ...play.vToward);
  const dMax = Math.max(play.threshold * 2, ...play.nearest.filter((d) => d !== null && d < 10));
  const x = (i) => pad + (i / Math.max(1, n - 1)) * (W - 2 * pad);
  const yv = (v) => H - pad - ((v - vMin) / (vMax - vMin)) * (H - 2 * pad);
  const yd = (d) => H - pad - (Math.min(d, dMax) / dMax) * (H - 2 * pad);
  const first = play.frames[0];

  ctx.fillStyle = "rgba(230, 120, 40, 0.18)";
  for (const w of play.windows) {
    const a = x(w.startFrame - first - 0.5), b = x(w.endFrame - first + 0.5);
    ctx.fillRect(a, pad, b - a, H - 2 * pad);
  }
  ctx.strokeStyle = "#bbb";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(pad, yd(play.threshold));
  ctx.lineTo(W - pad, yd(play.threshold));
  ctx.stroke();
  ctx.setLineDash([]);

  ctx.fillStyle = "#888";
  play.nearest.forEach((d, i) => {
    if (d !== null) ctx.fillRect(x(i) - 1.5, yd(d) - 1.5, 3, 3);
  });

  ctx.strokeStyle = "#1f5fa8";
  ctx.lineWidth = 2;
  ctx.beginPath();
  play.vToward.forEach((v, i) => (i ? ctx.lineTo(x(i), yv(v)) : ctx.moveTo(x(i), yv(v))));
  ctx.stroke();
  ctx.lineWidth = 1;

  ctx.fillStyle = "#222";
  ctx.fillText(`${vMax.toFixed(1)} yd/s`, 2, yv(vMax) + 4);
  ctx.fillText(`frame ${first}`, pad, H - 8);
  ctx.fillText(`frame ${play.frames[n - 1]}`, W - pad - 60, H - 8);
  ctx.fillText(`D = ${play.threshold.toFixed(1)} yd`, W - pad - 60, yd(play.threshold) - 4);
}

function tables(play) {
  const win = play.windows
    .map((w) => `<tr><td>${w.index}</td><td>${w.startFrame}-${w.endFrame}</td><td>${fmt(w.vStart)}</td><td>${fmt(w.vEnd)}</td>
      <td>${fmt(w.vPre)}</td><td>${fmt(w.vPost)}</td><td>${fmt(w.w)}</td><td>${w.case}</td></tr>`)
    .join("");
  const totals = new Map();
  for (const c of play.credits) {
    const t = totals.get(c.defenderId) ?? { name: c.name, position: c.position, w: 0 };
    t.w += c.wPlayer;
    totals.set(c.defenderId, t);
  }
  const cred = [...totals.values()]
    .sort((a, b) => b.w - a.w)
    .map((t) => `<tr><td>${t.name}</td><td>${t.position}</td><td>${fmt(t.w)}</td></tr>`)
    .join("");
  return `<table><tr><th>window</th><th>frames</th><th>vStart</th><th>vEnd</th><th>vPre</th><th>vPost</th><th>w</th><th>case</th></tr>${win}</table>
    <table><tr><th>defender</th><th>pos</th><th>credit</th></tr>${cred}</table>
    <p>play total ${fmt(play.total)}</p>`;
}

function show(prefix, produce) {
  const d = Number($(`${prefix}-d`).value);
  $(`${prefix}-d-val`).textContent = d.toFixed(1);
  try {
    const play = JSON.parse(produce(d));
    draw($(`${prefix}-chart`), play);
    $(`${prefix}-out`).innerHTML = tables(play);
  } catch (e) {
    $(`${prefix}-out`).innerHTML = `<p class="err">${e}</p>`;
  }
}

function landmarks() {
  const last = $("lm-last").checked;
  $("lm-post").disabled = last;
  const r = JSON.parse(
    value_window(
      Number($("lm-start").value),
      Number($("lm-end").value),
      Number($("lm-pre").value),
      last ? -Infinity : Number($("lm-post").value),
      $("lm-inside").checked,
    ),
  );
  $("lm-out").textContent = `w = ${r.w.toFixed(4)} (${r.case})`;
}

await init();

const example = () => show("ex", worked_example);
const simulate = () => show("sim", (d) => simulate_play(Number($("sim-seed").value) >>> 0, d));
$("ex-d").addEventListener("input", example);
$("sim-d").addEventListener("input", simulate);
$("sim-seed").addEventListener("change", simulate);
$("sim-next").addEventListener("click", () => {
  $("sim-seed").value = Number($("sim-seed").value) + 1;
  simulate();
});
for (const id of ["lm-start", "lm-end", "lm-pre", "lm-post", "lm-last", "lm-inside"]) $(id).addEventListener("input", landmarks);
example();
simulate();
landmarks();
