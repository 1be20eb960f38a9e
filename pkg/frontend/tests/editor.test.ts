import { describe, expect, it } from "vitest";

import { parseTree } from "../src/blocks.js";
import { BlockEditor, PALETTE } from "../src/editor.js";

describe("BlockEditor", () => {
  it("palette offers the six command blocks plus repeat", () => {
    expect(PALETTE).toEqual([
      "move_forward",
      "move_right",
      "move_left",
      "move_backward",
      "stop",
      "make_expression",
      "repeat",
    ]);
  });

  it("expression drop-down has exactly 11 options", () => {
    expect(new BlockEditor().expressionOptions()).toHaveLength(11);
  });

  it("composes repeat(3){forward} into the wire document", () => {
    const editor = new BlockEditor();
    const loop = editor.add("repeat");
    editor.setCount(loop.id, 3);
    editor.add("move_forward", loop.id);
    expect(editor.toDocument()).toEqual({
      kind: "sequence",
      children: [{ kind: "repeat", count: 3, body: [{ kind: "move_forward" }] }],
    });
  });

  it("serialization round-trips through parse and load", () => {
    const editor = new BlockEditor();
    editor.add("make_expression");
    const loop = editor.add("repeat");
    editor.setCount(loop.id, 2);
    editor.add("move_forward", loop.id);
    const inner = editor.add("repeat", loop.id);
    editor.add("move_left", inner.id);
    editor.add("stop");

    const text = editor.serialize();
    parseTree(text); // server-grammar valid

    const reloaded = new BlockEditor();
    reloaded.load(text);
    expect(reloaded.serialize()).toBe(text); // identical tree after re-download
  });

  it("remove and move reshape the program", () => {
    const editor = new BlockEditor();
    const a = editor.add("move_forward");
    const loop = editor.add("repeat");
    const b = editor.add("move_left", loop.id);
    editor.move(a.id, loop.id, 0);
    expect(editor.toDocument()).toEqual({
      kind: "sequence",
      children: [{ kind: "repeat", count: 2, body: [{ kind: "move_forward" }, { kind: "move_left" }] }],
    });
    editor.remove(b.id);
    expect(editor.toDocument()).toEqual({
      kind: "sequence",
      children: [{ kind: "repeat", count: 2, body: [{ kind: "move_forward" }] }],
    });
  });

  it("refuses to move a repeat into its own body", () => {
    const editor = new BlockEditor();
    const outer = editor.add("repeat");
    const inner = editor.add("repeat", outer.id);
    expect(() => editor.move(outer.id, inner.id, 0)).toThrow();
  });

  it("setExpression validates against the closed set", () => {
    const editor = new BlockEditor();
    const block = editor.add("make_expression");
    editor.setExpression(block.id, "laughing");
    expect(editor.toDocument()).toEqual({
      kind: "sequence",
      children: [{ kind: "make_expression", expression: "laughing" }],
    });
    expect(() => editor.setExpression(block.id, "rage")).toThrow();
  });

  it("maps server error paths to the offending block", () => {
    const editor = new BlockEditor();
    editor.add("move_forward");
    const loop = editor.add("repeat");
    const inner = editor.add("make_expression", loop.id);
    expect(editor.nodeAtPath("$.children[1].body[0]")?.id).toBe(inner.id);
    expect(editor.nodeAtPath("$.children[0]")?.id).toBe(editor.blocks[0]!.id);
    expect(editor.nodeAtPath("$.children[9]")).toBeNull();
  });

  it("clear empties the program", () => {
    const editor = new BlockEditor();
    editor.add("stop");
    editor.clear();
    expect(editor.isEmpty()).toBe(true);
    expect(editor.toDocument()).toEqual({ kind: "sequence", children: [] });
  });
});
