import init, { scenario, simulate, eventBounds, branchStats } from "./pkg/iqp_demo.js";

const $ = (id) => document.getElementById(id);

function guard(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function load() {
  guard($("weights"), () => {
    $("config").value = scenario($("scenario").value);
    $("weights").textContent = "";
    $("bounds-out").textContent = "";
    $("branch-out").textContent = "";
  });
}

function showWeights() {
  guard($("weights"), () => {
    const r = JSON.parse(simulate($("config").value));
    const head = "<tr><th>t</th>" + r.labels.map((l) => `<th>${l}</th>`).join("") + "</tr>";
    const rows = r.weights
      .map((w, t) => `<tr><td>${t}</td>` + w.map((x) => `<td>${x.toFixed(6)}</td>`).join("") + "</tr>")
      .join("");
    $("weights").innerHTML = `<table>${head}${rows}</table>`;
  });
}

function showBounds() {
  const out = $("bounds-out");
  guard(out, () => {
    const rules = [...document.querySelectorAll(".rule:checked")].map((c) => c.value).join(",");
    const r = JSON.parse(
      eventBounds($("config").value, $("event").value, rules, +$("epsilon").value, +$("alpha").value),
    );
    const fmt = (x) => (x === null ? "n/a" : x.toFixed(6));
    out.textContent = r.feasible
      ? `[${fmt(r.lower)}, ${fmt(r.upper)}]  from ${r.constraints} constraints`
      : `constraint set is infeasible (${r.constraints} constraints)`;
  });
}

function showBranch() {
  const out = $("branch-out");
  guard(out, () => {
    const r = JSON.parse(
      branchStats($("config").value, $("branch").value, +$("delta").value, +$("samples").value, +$("seed").value),
    );
    out.textContent = [
      `epsilon ${r.epsilon.toExponential(3)}  delta ${r.delta}`,
      `expectation ${r.worst_expectation.toExponential(3)} <= ${r.expectation_bound.toExponential(3)}  [${r.expectation_verdict}]`,
      `tail        ${r.worst_tail.toExponential(3)} <= ${r.tail_bound.toExponential(3)}  [${r.tail_verdict}]`,
      `${r.samples.length} samples`,
    ].join("\n");
  });
}

await init();
$("load").onclick = load;
$("simulate").onclick = showWeights;
$("bounds").onclick = showBounds;
$("branch-run").onclick = showBranch;
load();
