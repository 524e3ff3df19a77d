import init, { generateScenario, twoCluster, describe, runDistributed, runSequential } from "./pkg/dcg_web.js";

const colors = ["#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#1f78b4"];
const $ = (id) => document.getElementById(id);
const canvas = $("field");
const ctx = canvas.getContext("2d");

let scenario = null;
let view = null;
let result = null;

function log(text) {
  $("log").textContent = text;
}

function toPx([x, y]) {
  const s = Math.min(canvas.width / view.width, canvas.height / view.height);
  return [x * s, canvas.height - y * s, s];
}

function load(json) {
  scenario = json;
  view = JSON.parse(describe(json));
  result = null;
  $("step").max = 0;
  $("hops").max = Math.max(view.diameter, 1);
  $("order").value = view.radii.map((_, i) => i).join("-");
  $("legend").innerHTML = view.radii
    .map((r, i) => `<span style="background:${colors[i % colors.length]}"></span>agent ${i} (r=${r})`)
    .join("");
  draw();
  log(`${view.radii.length} agents, ${view.placements.length} placements, ${view.points.length} points, graph diameter ${view.diameter}`);
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!view) return;
  ctx.fillStyle = "#999";
  for (const p of view.placements) {
    const [x, y] = toPx(p);
    ctx.fillRect(x - 2, y - 2, 4, 4);
  }
  view.points.forEach((p, k) => {
    const [x, y] = toPx(p);
    ctx.fillStyle = result && result.covered[k] ? "#222" : "#ccc";
    ctx.fillRect(x - 1, y - 1, 2, 2);
  });
  if (!result) return;
  const t = Number($("step").value);
  if (result.beliefs.length && t < result.beliefs.length) {
    // belief mass at step t, drawn as translucent discs
    result.beliefs[t].forEach((block, i) => {
      for (const [placement, mass] of block) {
        const [x, y, s] = toPx(view.placements[placement]);
        ctx.globalAlpha = 0.15 + 0.6 * mass;
        ctx.fillStyle = colors[i % colors.length];
        ctx.beginPath();
        ctx.arc(x, y, Math.max(3, view.radii[i] * s * mass), 0, 2 * Math.PI);
        ctx.fill();
      }
    });
    ctx.globalAlpha = 1;
  }
  if (!result.beliefs.length || t === result.beliefs.length) {
    for (const pick of result.picks) {
      const [x, y, s] = toPx(pick.at);
      ctx.strokeStyle = colors[pick.agent % colors.length];
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(x, y, view.radii[pick.agent] * s, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

function show(json, label) {
  result = JSON.parse(json);
  const steps = result.beliefs.length;
  $("step").max = steps;
  $("step").value = steps;
  updateStepLabel();
  draw();
  const picks = result.picks.map((p) => `agent ${p.agent} -> placement ${p.placement}`).join("\n");
  const audit = steps ? `\naudit: ${result.audit ?? "all invariants hold"}` : "";
  log(`${label}\nutility ${result.utility}\n${picks}${audit}`);
}

function updateStepLabel() {
  const t = Number($("step").value);
  const steps = result ? result.beliefs.length : 0;
  $("stepLabel").textContent = steps === 0 ? "" : t === steps ? "final placement" : `belief after step ${t + 1} of ${steps}`;
}

function guarded(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      log(`error: ${e}`);
    }
  };
}

await init();
$("generate").onclick = guarded(() =>
  load(generateScenario(Number($("scSeed").value), Number($("scPoints").value), $("scGraph").value)),
);
$("fixture").onclick = guarded(() => load(twoCluster()));
$("distributed").onclick = guarded(() => {
  const [T, K, hops, seed] = ["steps", "samples", "hops", "runSeed"].map((id) => Number($(id).value));
  show(runDistributed(scenario, T, K, hops, seed), `distributed, T=${T} K=${K} hops=${hops} seed=${seed}`);
});
$("sequential").onclick = guarded(() => {
  const order = $("order").value.split("-").map(Number);
  show(runSequential(scenario, Uint32Array.from(order)), `sequential, order ${$("order").value}`);
});
$("step").oninput = () => {
  updateStepLabel();
  draw();
};
load(generateScenario(1, 900, "ring"));
