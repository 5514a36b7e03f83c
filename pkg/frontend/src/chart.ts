// Minimal SVG line chart for the learning trace. Pure string building,
// so it stays testable without a DOM.

import { TraceRecord } from './api.js';

export interface Series {
  name: string;
  color: string;
  points: Array<[number, number]>; // x = labeled_count, y in [0, 1]
}

export function traceSeries(records: TraceRecord[]): Series[] {
  const f1 = records.map((r): [number, number] =>
    [r.labeled_count, r.test.f1 ?? 0]); // undefined scores plot as 0
  const share = records.map((r): [number, number] =>
    [r.labeled_count, r.positive_share]);
  return [
    { name: 'test F1', color: '#b22222', points: f1 },
    { name: 'share relevant in training set', color: '#1f77b4', points: share },
  ];
}

export function pathFor(points: Array<[number, number]>, width: number,
                        height: number, xMin: number, xMax: number): string {
  if (points.length === 0) return '';
  const span = Math.max(xMax - xMin, 1);
  const coords = points.map(([x, y]) => {
    const px = ((x - xMin) / span) * (width - 20) + 10;
    const py = height - 12 - y * (height - 24);
    return `${px.toFixed(1)},${py.toFixed(1)}`;
  });
  return `M${coords.join(' L')}`;
}

export function renderChartSvg(records: TraceRecord[], width = 560,
                               height = 220): string {
  if (records.length === 0) {
    return '<svg class="chart"></svg>';
  }
  const xs = records.map((r) => r.labeled_count);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const series = traceSeries(records);
  const paths = series.map((s) =>
    `<path d="${pathFor(s.points, width, height, xMin, xMax)}" ` +
    `fill="none" stroke="${s.color}" stroke-width="2"/>`).join('');
  const legend = series.map((s, i) =>
    `<text x="12" y="${16 + 14 * i}" fill="${s.color}" ` +
    `font-size="11">${s.name}</text>`).join('');
  const axis = `<line x1="10" y1="${height - 12}" x2="${width - 10}" ` +
    `y2="${height - 12}" stroke="#999"/>` +
    `<text x="${width - 70}" y="${height - 2}" font-size="10" ` +
    `fill="#666">${xMin}..${xMax} labeled</text>`;
  return `<svg class="chart" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}">${axis}${paths}${legend}</svg>`;
}
