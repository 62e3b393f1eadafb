export { ConfigError, ParseError, UnsupportedDimensionError } from "./errors";
export { Table, columnIndex, numberAt, parseTable } from "./csv";
export { EllipsoidData, UnionData, parseUnion } from "./regions";
export { contains, ellipseOutline, mahalanobisSq, unionContains } from "./geometry";
export {
  LinearScale,
  formatTick,
  makeScale,
  num,
  scaleValue,
  svgDocument,
  tag,
  textLabel,
  ticks,
} from "./svg";
export {
  BoxStats,
  FIGURE_KINDS,
  FigureKind,
  FigureSpec,
  RenderResult,
  STYLE,
  boxStats,
  quantile,
  render,
  renderAlphaSweep,
  renderBoxplot,
  renderCoverageScatter,
  renderVarianceCurve,
} from "./figures";
export { buildSpec, main } from "./cli";
