/**
 * Renders the engine's TeX strings as HTML: sub/superscript groups become
 * <sub>/<sup>, control sequences map to their unicode glyphs, everything else
 * is escaped verbatim. The engine is the single source of truth; this file
 * never interprets expressions, it only typesets the string it was given.
 */
const GLYPHS = {
    alpha: "α", beta: "β", gamma: "γ", delta: "δ", epsilon: "ε", zeta: "ζ",
    eta: "η", theta: "θ", iota: "ι", kappa: "κ", lambda: "λ", mu: "μ",
    nu: "ν", xi: "ξ", pi: "π", rho: "ρ", sigma: "σ", tau: "τ", upsilon: "υ",
    phi: "φ", chi: "χ", psi: "ψ", omega: "ω",
    Gamma: "Γ", Delta: "Δ", Theta: "Θ", Lambda: "Λ", Xi: "Ξ", Pi: "Π",
    Sigma: "Σ", Phi: "Φ", Psi: "Ψ", Omega: "Ω",
    partial: "∂", ppartial: "∂'", int: "∫", sum: "Σ", prod: "Π",
    dagger: "†", infty: "∞",
};
function escapeHtml(text) {
    return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
        .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
function renderGroup(r, stopAt) {
    let out = "";
    while (r.at < r.text.length) {
        const ch = r.text[r.at];
        if (ch === stopAt) {
            r.at += 1;
            return out;
        }
        out += renderToken(r);
    }
    return out;
}
function renderScript(r, tag) {
    // _{a b} or _x
    if (r.text[r.at] === "{") {
        r.at += 1;
        return `<${tag}>${renderGroup(r, "}")}</${tag}>`;
    }
    return `<${tag}>${renderToken(r)}</${tag}>`;
}
function renderName(name) {
    const glyph = GLYPHS[name];
    if (glyph !== undefined)
        return escapeHtml(glyph);
    if (name.length > 1)
        return `<i>${escapeHtml(name)}</i>`;
    return `<i>${escapeHtml(name)}</i>`;
}
function renderToken(r) {
    const ch = r.text[r.at];
    if (ch === "\\") {
        const m = /^\\([a-zA-Z]+)/.exec(r.text.slice(r.at));
        if (m) {
            r.at += m[0].length;
            return renderName(m[1]);
        }
        r.at += 1;
        return escapeHtml(ch);
    }
    if (ch === "_") {
        r.at += 1;
        return renderScript(r, "sub");
    }
    if (ch === "^") {
        r.at += 1;
        return renderScript(r, "sup");
    }
    if (ch === "{") {
        r.at += 1;
        return "{" + renderGroup(r, "}") + "}";
    }
    if (/[a-zA-Z]/.test(ch)) {
        const m = /^[a-zA-Z][a-zA-Z0-9]*/.exec(r.text.slice(r.at));
        r.at += m[0].length;
        return renderName(m[0]);
    }
    r.at += 1;
    return escapeHtml(ch);
}
export function renderTex(tex) {
    const r = { text: tex, at: 0 };
    let out = "";
    while (r.at < r.text.length) {
        out += renderToken(r);
    }
    return out;
}
