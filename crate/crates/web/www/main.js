import init, { det_trace, gauss_view, power_curve } from "../pkg/qalign_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(out, f) {
  try {
    f();
  } catch (e) {
    out.innerHTML = `<p class="err">${e}</p>`;
  }
}

function runDet() {
  const out = $("det-out");
  guarded(out, () => {
    const t = JSON.parse(det_trace(num("det-k"), num("det-n"), num("det-seed"), $("det-aligned").checked));
    const lines = [`shifts ${JSON.stringify(t.shifts)}  aligned: ${t.aligned}`];
    t.inputs.forEach((x, k) => {
      lines.push(`user ${k + 1}  X ${x}  Y ${t.outputs[k]}  sent ${t.sent[k].join("")}  got ${t.decoded[k].join("")}`);
    });
    lines.push(`bit errors: ${t.bit_errors}`);
    out.textContent = lines.join("\n");
  });
}

function runGauss() {
  const out = $("g-out");
  guarded(out, () => {
    const v = JSON.parse(gauss_view(num("g-k"), num("g-q"), num("g-n"), num("g-seed"), $("g-noise").checked));
    const rows = v.digits
      .map((d) => `<tr class="${d.role}"><td>${d.position}</td><td>${d.role}</td><td>${d.x}</td><td>${d.ybar}</td><td>${d.y}</td></tr>`)
      .join("");
    out.innerHTML =
      `<p>alphabet M = ${v.alphabet}; sent ${v.sent.join(" ")}; decoded ${v.decoded.join(" ")}; ` +
      `interference sums ${v.interference_sums.join(" ")}${v.y_negative ? "; output negative, clamped" : ""}</p>` +
      `<table><tr><th>position</th><th>role</th><th>X</th><th>Ybar</th><th>Y</th></tr>${rows}</table>`;
  });
}

function runPower() {
  const out = $("p-out");
  guarded(out, () => {
    const c = JSON.parse(power_curve(num("p-k"), num("p-q"), num("p-n")));
    const w = 560, h = 220, pad = 30;
    const maxN = c.points.length;
    const maxY = Math.max(c.dof_theory, ...c.points.map((p) => p.dof)) * 1.1;
    const x = (n) => pad + ((n - 1) / Math.max(1, maxN - 1)) * (w - 2 * pad);
    const y = (d) => h - pad - (d / maxY) * (h - 2 * pad);
    const path = c.points.map((p, i) => `${i ? "L" : "M"}${x(p.n)},${y(p.dof)}`).join(" ");
    out.innerHTML =
      `<p>M = ${c.alphabet}; limit ${c.dof_theory.toFixed(4)} (dashed)</p>` +
      `<svg width="${w}" height="${h}">` +
      `<line x1="${pad}" x2="${w - pad}" y1="${y(c.dof_theory)}" y2="${y(c.dof_theory)}" stroke="#999" stroke-dasharray="4"/>` +
      `<path d="${path}" fill="none" stroke="#2a6"/>` +
      `<text x="${pad}" y="${h - 8}">N = 1</text><text x="${w - pad - 40}" y="${h - 8}">N = ${maxN}</text></svg>` +
      `<pre>${c.points.map((p) => `N=${p.n}  log_Q P=${p.logq_power.toFixed(3)}  DoF=${p.dof.toFixed(4)}`).join("\n")}</pre>`;
  });
}

await init();
$("det-run").onclick = runDet;
$("g-run").onclick = runGauss;
$("p-run").onclick = runPower;
runDet();
runGauss();
runPower();
