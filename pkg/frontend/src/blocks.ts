/**
 * Block-tree documents: the JSON wire format the bus compiles.
 *
 * Every block is an object with a `kind` plus kind-specific fields; the
 * server's golden tests freeze the same field names, so a tree that
 * passes parseTree here is exactly what POST /api/programs accepts.
 */

export type IntExpr =
  | number
  | { lit: number }
  | { var: string }
  | { op: "+" | "-" | "*"; left: IntExpr; right: IntExpr };

export type BoolExpr =
  | { op: "<" | "=" | ">"; left: IntExpr; right: IntExpr }
  | { op: "and" | "or"; left: BoolExpr; right: BoolExpr }
  | { op: "not"; operand: BoolExpr };

export type ActionKind =
  | "move_forward"
  | "move_right"
  | "move_left"
  | "move_backward"
  | "stop";

export type BlockNode =
  | { kind: ActionKind }
  | { kind: "make_expression"; expression: string }
  | { kind: "repeat"; count: IntExpr; body: BlockNode[] }
  | { kind: "if"; cond: BoolExpr; then: BlockNode[]; else?: BlockNode[] }
  | { kind: "set_var"; name: string; value: IntExpr }
  | { kind: "sequence"; children: BlockNode[] };

export const ACTION_KINDS: readonly ActionKind[] = [
  "move_forward",
  "move_right",
  "move_left",
  "move_backward",
  "stop",
];

/** The robot's closed expression set; the server serves the same list. */
export const EXPRESSIONS: readonly string[] = [
  "happy",
  "sad",
  "angry",
  "surprised",
  "afraid",
  "disgusted",
  "neutral",
  "love",
  "sleepy",
  "confused",
  "laughing",
];

export class TreeError extends Error {
  constructor(message: string, readonly path: string) {
    super(`${message} (at ${path})`);
  }
}

export function serializeTree(root: BlockNode): string {
  return JSON.stringify(root);
}

function parseIntExpr(doc: unknown, path: string): IntExpr {
  if (typeof doc === "number") {
    if (!Number.isInteger(doc)) throw new TreeError("literal must be an integer", path);
    return doc;
  }
  if (typeof doc !== "object" || doc === null) {
    throw new TreeError("expected an integer expression", path);
  }
  const obj = doc as Record<string, unknown>;
  if ("lit" in obj) {
    if (!Number.isInteger(obj.lit)) throw new TreeError("literal must be an integer", `${path}.lit`);
    return { lit: obj.lit as number };
  }
  if ("var" in obj) {
    if (typeof obj.var !== "string" || !obj.var) {
      throw new TreeError("variable name must be a non-empty string", `${path}.var`);
    }
    return { var: obj.var };
  }
  if (obj.op === "+" || obj.op === "-" || obj.op === "*") {
    return {
      op: obj.op,
      left: parseIntExpr(obj.left, `${path}.left`),
      right: parseIntExpr(obj.right, `${path}.right`),
    };
  }
  throw new TreeError("integer expression needs one of: lit, var, op", path);
}

function parseBoolExpr(doc: unknown, path: string): BoolExpr {
  if (typeof doc !== "object" || doc === null) {
    throw new TreeError("expected a condition object", path);
  }
  const obj = doc as Record<string, unknown>;
  if (obj.op === "<" || obj.op === "=" || obj.op === ">") {
    return {
      op: obj.op,
      left: parseIntExpr(obj.left, `${path}.left`),
      right: parseIntExpr(obj.right, `${path}.right`),
    };
  }
  if (obj.op === "and" || obj.op === "or") {
    return {
      op: obj.op,
      left: parseBoolExpr(obj.left, `${path}.left`),
      right: parseBoolExpr(obj.right, `${path}.right`),
    };
  }
  if (obj.op === "not") {
    return { op: "not", operand: parseBoolExpr(obj.operand, `${path}.operand`) };
  }
  throw new TreeError(`unknown condition operator ${String(obj.op)}`, `${path}.op`);
}

function parseBody(doc: unknown, path: string): BlockNode[] {
  if (!Array.isArray(doc)) throw new TreeError("expected a list of blocks", path);
  return doc.map((child, i) => parseNode(child, `${path}[${i}]`));
}

function parseNode(doc: unknown, path: string): BlockNode {
  if (typeof doc !== "object" || doc === null) {
    throw new TreeError("expected a block object", path);
  }
  const obj = doc as Record<string, unknown>;
  const kind = obj.kind;
  if ((ACTION_KINDS as readonly string[]).includes(kind as string)) {
    return { kind: kind as ActionKind };
  }
  switch (kind) {
    case "make_expression": {
      if (!EXPRESSIONS.includes(obj.expression as string)) {
        throw new TreeError(`unknown expression ${String(obj.expression)}`, `${path}.expression`);
      }
      return { kind, expression: obj.expression as string };
    }
    case "repeat":
      return {
        kind,
        count: parseIntExpr(obj.count, `${path}.count`),
        body: parseBody(obj.body, `${path}.body`),
      };
    case "if": {
      const node: BlockNode = {
        kind,
        cond: parseBoolExpr(obj.cond, `${path}.cond`),
        then: parseBody(obj.then, `${path}.then`),
      };
      if (obj.else !== undefined) node.else = parseBody(obj.else, `${path}.else`);
      return node;
    }
    case "set_var": {
      if (typeof obj.name !== "string" || !obj.name) {
        throw new TreeError("variable name must be a non-empty string", `${path}.name`);
      }
      return { kind, name: obj.name, value: parseIntExpr(obj.value, `${path}.value`) };
    }
    case "sequence":
      return { kind, children: parseBody(obj.children, `${path}.children`) };
    default:
      throw new TreeError(`unknown block kind ${String(kind)}`, path);
  }
}

/** Parse and validate a document; throws TreeError with the failing path. */
export function parseTree(text: string): BlockNode {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new TreeError(`invalid JSON: ${String(e)}`, "$");
  }
  return parseNode(doc, "$");
}
