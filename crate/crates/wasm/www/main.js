import init, { optimalDrive, biasPoint, resetScan } from "./pkg/qcrsim_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function plot(canvas, xs, ys, threshold) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const lo = Math.log10(Math.max(1e-4, Math.min(...ys.filter((y) => y > 0))));
  const hi = Math.log10(Math.max(...ys));
  const xmax = xs[xs.length - 1];
  const X = (x) => pad + (x / xmax) * (w - 2 * pad);
  const Y = (y) => h - pad - ((Math.log10(Math.max(y, 1e-4)) - lo) / (hi - lo || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(`${xmax} ns`, w - pad - 30, h - pad + 15);
  ctx.fillText(`P_e ${Math.pow(10, hi).toExponential(1)}`, pad, pad - 5);
  ctx.strokeStyle = "#c33";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(pad, Y(threshold));
  ctx.lineTo(w - pad, Y(threshold));
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.strokeStyle = "#06c";
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(X(x), Y(ys[i])) : ctx.moveTo(X(x), Y(ys[i]))));
  ctx.stroke();
}

await init();

$("d-run").onclick = () =>
  guard($("d-out"), () => {
    const d = JSON.parse(optimalDrive(num("d-g"), num("d-k")));
    $("d-out").textContent = `Ω/2π = ${d.omega_mhz.toFixed(3)} MHz${d.valid ? "" : " (outside the equal-decay regime)"}`;
  });

$("b-run").onclick = () =>
  guard($("b-out"), () => {
    const b = JSON.parse(biasPoint(num("b-v")));
    $("b-out").textContent = [
      `Γ↓      ${b.gamma_down.toExponential(4)} 1/s`,
      `Γ↑      ${b.gamma_up.toExponential(4)} 1/s`,
      `κ_eff   ${b.kappa_eff.toExponential(4)} 1/s`,
      `N_T     ${b.n_t === null ? "heating" : b.n_t.toExponential(3)}`,
      `P_g max ${(100 * b.fidelity).toFixed(3)} %`,
    ].join("\n");
  });

$("s-run").onclick = () =>
  guard($("s-out"), () => {
    $("s-out").textContent = "running…";
    const s = JSON.parse(resetScan(num("s-v"), num("s-g"), num("s-o"), num("s-t"), num("s-d")));
    const settle = s.settling_ns === null ? "does not settle below 1 %" : `settles below 1 % at ${s.settling_ns.toFixed(1)} ns`;
    $("s-out").textContent = `Ω/2π = ${s.omega_mhz.toFixed(2)} MHz, κ_eff = ${s.kappa_eff.toExponential(3)} 1/s, ${settle}`;
    plot($("plot"), s.tau_ns, s.p_e, 0.01);
  });
