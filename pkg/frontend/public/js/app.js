/** Browser entry: a thin view over the server-side notebook document. */
import { renderTex } from "./render.js";
const cellsEl = document.getElementById("cells");
const inputEl = document.getElementById("input");
const runEl = document.getElementById("run");
const busyEl = document.getElementById("busy");
const exportEl = document.getElementById("export");
function cellHtml(cell) {
    const out = cell.state === "error"
        ? `<div class="output error">${escapeText(cell.outputPlain)}</div>`
        : cell.outputTex
            ? `<div class="output math">${renderTex(cell.outputTex)}</div>`
            : "";
    return `<div class="cell ${cell.state}">` +
        `<pre class="input">${escapeText(cell.input)}</pre>${out}</div>`;
}
function escapeText(text) {
    return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
async function refresh() {
    const res = await fetch("/api/cells");
    const data = await res.json();
    cellsEl.innerHTML = data.cells.map(cellHtml).join("");
    busyEl.style.visibility = data.busy ? "visible" : "hidden";
}
async function submit() {
    const body = inputEl.value.trim();
    if (!body)
        return;
    inputEl.value = "";
    busyEl.style.visibility = "visible";
    const pending = fetch("/api/cell", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ body }),
    });
    await refresh();
    await pending;
    await refresh();
    inputEl.focus();
}
runEl.addEventListener("click", () => { void submit(); });
inputEl.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter" && (ev.ctrlKey || ev.shiftKey)) {
        ev.preventDefault();
        void submit();
    }
});
exportEl.addEventListener("click", () => {
    window.location.href = "/api/export";
});
void refresh();
