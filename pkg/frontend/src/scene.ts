/**
 * Dual 2D projection of the scene: top-down (x/y) and side elevation (y/z).
 * Pure SVG-string renderer; the app drops the markup into the page.
 *
 * Orientation class and held state are the decision-relevant signals, so
 * objects are drawn as upright bars or lying slabs, tinted when held, with
 * the gripper as a crosshair whose ring reflects aperture.
 */

import type { SceneSnapshot } from "./api.js";

const W = 280;
const H = 220;

interface Box {
  toX(v: number): number;
  toY(v: number): number;
}

function projector(xRange: [number, number], yRange: [number, number]): Box {
  const [x0, x1] = xRange;
  const [y0, y1] = yRange;
  return {
    toX: (v) => ((v - x0) / (x1 - x0)) * (W - 40) + 20,
    toY: (v) => H - (((v - y0) / (y1 - y0)) * (H - 40) + 20),
  };
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function objectGlyph(
  box: Box,
  u: number,
  v: number,
  horizontal: boolean,
  held: boolean,
  label: string,
): string {
  const x = box.toX(u);
  const y = box.toY(v);
  const fill = held ? "#e8995a" : "#7aa6c2";
  const w = horizontal ? 26 : 12;
  const h = horizontal ? 12 : 26;
  return (
    `<rect x="${(x - w / 2).toFixed(1)}" y="${(y - h / 2).toFixed(1)}" ` +
    `width="${w}" height="${h}" rx="3" fill="${fill}" />` +
    `<text x="${x.toFixed(1)}" y="${(y + h / 2 + 12).toFixed(1)}" ` +
    `font-size="9" text-anchor="middle" fill="#444">${esc(label)}</text>`
  );
}

function gripperGlyph(box: Box, u: number, v: number, aperture: number): string {
  const x = box.toX(u);
  const y = box.toY(v);
  const r = 4 + aperture * 8;
  return (
    `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${r.toFixed(1)}" ` +
    `fill="none" stroke="#c0392b" stroke-width="2" />` +
    `<line x1="${(x - 3).toFixed(1)}" y1="${y.toFixed(1)}" x2="${(x + 3).toFixed(1)}" ` +
    `y2="${y.toFixed(1)}" stroke="#c0392b" stroke-width="1.5" />`
  );
}

function panel(title: string, body: string): string {
  return (
    `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg" role="img">` +
    `<rect width="${W}" height="${H}" fill="#f7f7f4" stroke="#ccc" />` +
    `<text x="8" y="14" font-size="10" fill="#888">${esc(title)}</text>` +
    body +
    `</svg>`
  );
}

export function renderTopDown(scene: SceneSnapshot): string {
  const box = projector([-0.25, 0.75], [0.0, 1.0]);
  let body = "";
  for (const [name, obj] of Object.entries(scene.objects)) {
    body += objectGlyph(
      box, obj.position[0], obj.position[1],
      obj.orientation === "horizontal", obj.held, name,
    );
  }
  body += gripperGlyph(
    box, scene.gripper.position[0], scene.gripper.position[1], scene.gripper.aperture,
  );
  return panel("top-down (x / y)", body);
}

export function renderSideElevation(scene: SceneSnapshot): string {
  const box = projector([0.0, 1.0], [scene.table_height - 0.1, scene.table_height + 0.6]);
  const tableY = box.toY(scene.table_height);
  let body =
    `<line x1="10" y1="${tableY.toFixed(1)}" x2="${W - 10}" y2="${tableY.toFixed(1)}" ` +
    `stroke="#8d6e63" stroke-width="3" />`;
  for (const [name, obj] of Object.entries(scene.objects)) {
    body += objectGlyph(
      box, obj.position[1], obj.position[2],
      obj.orientation === "horizontal", obj.held, name,
    );
  }
  body += gripperGlyph(
    box, scene.gripper.position[1], scene.gripper.position[2], scene.gripper.aperture,
  );
  return panel("side elevation (y / z)", body);
}

export function renderScene(scene: SceneSnapshot): string {
  return renderTopDown(scene) + renderSideElevation(scene);
}
