import init, { generateAndDetect, arimaForecast, hybridDay } from "./pkg/sdlstm_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const canvas = $("plot");
const ctx = canvas.getContext("2d");

function status(text) {
  $("status").textContent = text;
}

function legend(items) {
  $("legend").innerHTML = items
    .map(([color, label]) => `<span><i class="sw" style="background:${color}"></i>${label}</span>`)
    .join("");
}

// series: [{ xs, ys, color, dots? }]; x in sample units, shared y scale
function plot(series, xMax) {
  const pad = 50;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  const ys = series.flatMap((s) => s.ys);
  const lo = Math.min(0, ...ys);
  const hi = Math.max(...ys) * 1.05 || 1;
  const px = (x) => pad + (x / xMax) * w;
  const py = (y) => pad + h - ((y - lo) / (hi - lo)) * h;

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#bbb";
  ctx.fillStyle = "#555";
  ctx.font = "22px system-ui";
  ctx.strokeRect(pad, pad, w, h);
  for (let i = 0; i <= 4; i++) {
    const y = lo + ((hi - lo) * i) / 4;
    ctx.fillText(y.toFixed(0), 4, py(y) + 6);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.lineWidth = s.width || 2;
    if (s.dots) {
      s.xs.forEach((x, i) => {
        ctx.beginPath();
        ctx.arc(px(x), py(s.ys[i]), s.dots, 0, 2 * Math.PI);
        ctx.fill();
      });
      continue;
    }
    ctx.beginPath();
    s.xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
    ctx.stroke();
  }
}

const range = (n, from = 0) => Array.from({ length: n }, (_, i) => i + from);

function call(fn, request) {
  try {
    return JSON.parse(fn(JSON.stringify(request)));
  } catch (e) {
    status(`error: ${e.message || e}`);
    return null;
  }
}

function runDetect() {
  const r = call(generateAndDetect, {
    seed: num("seed"), days: 3, spike_rate: num("spike-rate"), noise_sd: num("noise-sd"),
  });
  if (!r) return;
  const at = (idx) => ({ xs: idx, ys: idx.map((i) => r.counts[i]) });
  plot([
    { xs: range(r.counts.length), ys: r.counts, color: "#4a7ab8", width: 1.5 },
    { xs: range(r.noiseless.length), ys: r.noiseless, color: "#999", width: 1 },
    { ...at(r.true_spikes), color: "#e8a33d", dots: 9 },
    { ...at(r.flagged), color: "#c0392b", dots: 5 },
  ], r.counts.length);
  legend([["#4a7ab8", "counts"], ["#999", "noiseless"], ["#e8a33d", "injected spike"], ["#c0392b", "flagged"]]);
  const pct = (v) => (v == null ? "n/a" : (100 * v).toFixed(0) + "%");
  status(`recall ${pct(r.recall)}, precision ${pct(r.precision)}, dropout p = ${r.dropout_p.toFixed(3)}`);
}

function runArima() {
  const r = call(arimaForecast, { seed: num("seed"), origin_minute: num("origin"), horizon: 16 });
  if (!r) return;
  const n = r.history.length;
  plot([
    { xs: range(n), ys: r.history, color: "#4a7ab8", width: 1.5 },
    { xs: range(r.actual.length, n), ys: r.actual, color: "#999" },
    { xs: range(r.forecast.length, n), ys: r.forecast, color: "#c0392b", width: 3 },
  ], n + r.forecast.length);
  legend([["#4a7ab8", "last day"], ["#999", "actual"], ["#c0392b", "forecast"]]);
  status(`ARIMA${r.order}, MAPE over the horizon ${r.mape == null ? "n/a" : r.mape.toFixed(2) + "%"}`);
}

function runHybrid() {
  status("training...");
  // let the status paint before the blocking call
  setTimeout(() => {
    const r = call(hybridDay, {
      seed: num("seed"), epochs: num("epochs"),
      arima_start_minute: num("win-start"), arima_end_minute: num("win-end"),
    });
    if (!r) return;
    // plot per quarter hour; hourly points as quarter-hour averages
    const series = [{ xs: range(r.truth.length), ys: r.truth, color: "#999", width: 1.5 }];
    for (const [source, color] of [["sdlstm", "#2e8b57"], ["arima", "#c0392b"]]) {
      const pts = r.points.filter((p) => p.source === source);
      series.push({
        xs: pts.map((p) => p.minute / 15),
        ys: pts.map((p) => p.value / (p.interval_s / 900)),
        color,
        dots: 6,
      });
    }
    plot(series, 96);
    legend([["#999", "truth"], ["#2e8b57", "SDLSTM (hourly / 4)"], ["#c0392b", "ARIMA (15 min)"]]);
    status(`hybrid MAPE ${r.hybrid_mape.toFixed(2)}%, SDLSTM only ${r.sdlstm_mape.toFixed(2)}%, ` +
      `dropout p = ${r.dropout_p.toFixed(3)}, ARIMA${r.arima_order}`);
  }, 20);
}

await init();
$("run-detect").onclick = runDetect;
$("run-arima").onclick = runArima;
$("run-hybrid").onclick = runHybrid;
runDetect();
