/**
 * The block editor's program model: a tree of editable nodes with stable
 * ids, serialized to the block-tree document on Run. Server-side compile
 * errors carry a document path; nodeAtPath maps one back to the block to
 * highlight.
 */

import {
  ACTION_KINDS,
  type ActionKind,
  type BlockNode,
  EXPRESSIONS,
  parseTree,
  serializeTree,
} from "./blocks.js";

export type EditorKind = ActionKind | "make_expression" | "repeat";

export interface EditorNode {
  id: number;
  kind: EditorKind;
  expression?: string;
  count?: number;
  body?: EditorNode[];
}

export const PALETTE: readonly EditorKind[] = [...ACTION_KINDS, "make_expression", "repeat"];

export class BlockEditor {
  private nextId = 1;
  readonly blocks: EditorNode[] = [];

  /** What the Make-an-Expression drop-down offers: the closed set of 11. */
  expressionOptions(): readonly string[] {
    return EXPRESSIONS;
  }

  private make(kind: EditorKind): EditorNode {
    const node: EditorNode = { id: this.nextId++, kind };
    if (kind === "make_expression") node.expression = EXPRESSIONS[0];
    if (kind === "repeat") {
      node.count = 2;
      node.body = [];
    }
    return node;
  }

  private containerOf(parentId: number | null): EditorNode[] {
    if (parentId === null) return this.blocks;
    const parent = this.find(parentId);
    if (!parent || parent.kind !== "repeat" || !parent.body) {
      throw new Error(`block ${parentId} cannot contain children`);
    }
    return parent.body;
  }

  add(kind: EditorKind, parentId: number | null = null, index?: number): EditorNode {
    const container = this.containerOf(parentId);
    const node = this.make(kind);
    container.splice(index ?? container.length, 0, node);
    return node;
  }

  find(id: number, within: EditorNode[] = this.blocks): EditorNode | null {
    for (const node of within) {
      if (node.id === id) return node;
      if (node.body) {
        const hit = this.find(id, node.body);
        if (hit) return hit;
      }
    }
    return null;
  }

  remove(id: number, within: EditorNode[] = this.blocks): boolean {
    const at = within.findIndex((n) => n.id === id);
    if (at >= 0) {
      within.splice(at, 1);
      return true;
    }
    return within.some((n) => (n.body ? this.remove(id, n.body) : false));
  }

  /** Move a block to a new container/index (drag-and-drop semantics). */
  move(id: number, parentId: number | null, index: number): void {
    const node = this.find(id);
    if (!node) throw new Error(`no block ${id}`);
    if (node.kind === "repeat" && this.find(parentId ?? -1, node.body ?? [])) {
      throw new Error("cannot move a repeat into its own body");
    }
    this.remove(id);
    this.containerOf(parentId).splice(index, 0, node);
  }

  setExpression(id: number, expression: string): void {
    const node = this.find(id);
    if (!node || node.kind !== "make_expression") throw new Error(`block ${id} has no expression`);
    if (!EXPRESSIONS.includes(expression)) throw new Error(`unknown expression ${expression}`);
    node.expression = expression;
  }

  setCount(id: number, count: number): void {
    const node = this.find(id);
    if (!node || node.kind !== "repeat") throw new Error(`block ${id} has no count`);
    node.count = count;
  }

  clear(): void {
    this.blocks.length = 0;
  }

  isEmpty(): boolean {
    return this.blocks.length === 0;
  }

  private nodeToDoc(node: EditorNode): BlockNode {
    if (node.kind === "make_expression") {
      return { kind: "make_expression", expression: node.expression ?? EXPRESSIONS[0]! };
    }
    if (node.kind === "repeat") {
      return { kind: "repeat", count: node.count ?? 0, body: (node.body ?? []).map((n) => this.nodeToDoc(n)) };
    }
    return { kind: node.kind };
  }

  toDocument(): BlockNode {
    return { kind: "sequence", children: this.blocks.map((n) => this.nodeToDoc(n)) };
  }

  serialize(): string {
    return serializeTree(this.toDocument());
  }

  /** Rebuild the editor from a document (round-trips with serialize). */
  load(text: string): void {
    const doc = parseTree(text);
    this.clear();
    const addAll = (nodes: BlockNode[], parentId: number | null) => {
      for (const node of nodes) {
        if (node.kind === "sequence") {
          addAll(node.children, parentId);
        } else if (node.kind === "repeat") {
          const added = this.add("repeat", parentId);
          added.count = typeof node.count === "number" ? node.count : 0;
          addAll(node.body, added.id);
        } else if (node.kind === "make_expression") {
          const added = this.add("make_expression", parentId);
          added.expression = node.expression;
        } else if (node.kind === "if" || node.kind === "set_var") {
          throw new Error(`the editor does not offer ${node.kind} blocks`);
        } else {
          this.add(node.kind, parentId);
        }
      }
    };
    addAll(doc.kind === "sequence" ? doc.children : [doc], null);
  }

  /**
   * Resolve a server error path like "$.children[2].body[0]" to the
   * offending block, for inline highlighting.
   */
  nodeAtPath(path: string): EditorNode | null {
    const steps = [...path.matchAll(/\.(children|body)\[(\d+)\]/g)].map((m) => Number(m[2]));
    let container = this.blocks;
    let node: EditorNode | null = null;
    for (const index of steps) {
      node = container[index] ?? null;
      if (!node) return null;
      container = node.body ?? [];
    }
    return node;
  }
}
