"""Regenerate fixture.jsonl, the scripted provider responses for this scenario.

Run from anywhere: ``python3 scenarios/customblock/build_fixture.py``.
"""

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent


def msg(content):
    return {"type": "message", "content": content}


def tool(name, **args):
    return {"type": "tool", "tool": name, "args": args}


def done(note="", status="complete"):
    return {"type": "done", "status": status, "note": note}


def entry(agent, contains, *actions):
    return {"match": {"agent": agent, "contains": contains}, "response": {"actions": list(actions)}}


SPEC = {
    "title": "Add a CustomBlock block type",
    "clarified_goal": (
        "Authors can place a custom content block (title plus body text) on a page, "
        "configure it in the editor options panel, and the block survives save and load."
    ),
    "subtasks": [
        {"id": 1, "description": "Create the CustomBlock renderer component",
         "suggested_role": "frontend-specialist", "target_hints": ["src/blocks/CustomBlock.jsx"]},
        {"id": 2, "description": "Add a CustomBlock options panel to the editor",
         "suggested_role": "frontend-specialist",
         "target_hints": ["src/editor/BlockOptions.jsx"], "depends_on": [1]},
        {"id": 3, "description": "Declare the custom block type and its options type",
         "suggested_role": "backend-architect",
         "target_hints": ["src/types/blocks.ts", "src/constants.js"]},
        {"id": 4, "description": "Register the CustomBlock type in the block registry",
         "suggested_role": "backend-architect",
         "target_hints": ["src/blocks/registry.js"], "depends_on": [1, 3]},
    ],
    "acceptance_checks": ["python3 tests/check_blocks.py passes",
                          "the toolbar offers the custom block"],
    "search_terms": ["block type", "registerBlock", "BLOCK_TYPES", "options panel", "serialization"],
}

PLAN = {
    "steps": [
        {"id": "component", "description": "Create src/blocks/CustomBlock.jsx rendering title and body",
         "role": "frontend-specialist", "depends_on": [], "files": ["src/blocks/CustomBlock.jsx"]},
        {"id": "options-ui", "description": "Add CustomOptions panel and wire it into BlockOptions",
         "role": "frontend-specialist", "depends_on": ["component"],
         "files": ["src/editor/options/CustomOptions.jsx", "src/editor/BlockOptions.jsx"]},
        {"id": "types", "description": "Add the custom BLOCK_TYPES constant and BlockType member",
         "role": "backend-architect", "depends_on": [],
         "files": ["src/constants.js", "src/types/blocks.ts"]},
        {"id": "registration", "description": "Register CustomBlock in the block registry and index",
         "role": "backend-architect", "depends_on": ["component", "types"],
         "files": ["src/blocks/registry.js", "src/blocks/index.js"]},
    ]
}

CUSTOM_BLOCK = """import React from 'react';

export function CustomBlock({ block }) {
  const { title, body } = block.options;
  return (
    <article className="block block-custom">
      {title && <h3>{title}</h3>}
      <p>{body}</p>
    </article>
  );
}
"""

CUSTOM_OPTIONS = """import React from 'react';

export function CustomOptions({ options, onChange }) {
  return (
    <div>
      <label>
        Title
        <input value={options.title} onChange={(e) => onChange({ ...options, title: e.target.value })} />
      </label>
      <label>
        Body
        <textarea value={options.body} onChange={(e) => onChange({ ...options, body: e.target.value })} />
      </label>
    </div>
  );
}
"""

REVIEW = {
    "suggestions": [
        {
            "severity": "minor",
            "path": "src/blocks/registry.js",
            "anchor": "registerBlock('custom', CustomBlock);",
            "suggestion": "Refactor the hard-coded 'custom' string into the BLOCK_TYPES.CUSTOM constant.",
            "proposed_edit": {
                "find": "registerBlock('custom', CustomBlock);",
                "replace": "registerBlock(BLOCK_TYPES.CUSTOM, CustomBlock);",
            },
        }
    ]
}

ENTRIES = [
    entry("intent-translator", "Request:", msg(json.dumps(SPEC))),
    entry("planner", "Available roles:", msg(json.dumps(PLAN))),
    # step 1: look at an existing renderer, then write the new one
    entry("frontend-specialist", "plan step 1 of 4", tool("Read", path="src/blocks/TextBlock.jsx")),
    entry("frontend-specialist", "plan step 1 of 4",
          tool("Write", path="src/blocks/CustomBlock.jsx", content=CUSTOM_BLOCK),
          done("CustomBlock renderer created")),
    # step 2: options panel
    entry("frontend-specialist", "plan step 2 of 4",
          tool("Write", path="src/editor/options/CustomOptions.jsx", content=CUSTOM_OPTIONS),
          tool("Edit", path="src/editor/BlockOptions.jsx",
               find="import { VideoOptions } from './options/VideoOptions';\n",
               replace="import { VideoOptions } from './options/VideoOptions';\n"
                       "import { CustomOptions } from './options/CustomOptions';\n"),
          tool("Edit", path="src/editor/BlockOptions.jsx",
               find="  [BLOCK_TYPES.VIDEO]: VideoOptions,\n",
               replace="  [BLOCK_TYPES.VIDEO]: VideoOptions,\n  [BLOCK_TYPES.CUSTOM]: CustomOptions,\n"),
          done("options panel wired")),
    # step 3: constant and types
    entry("backend-architect", "plan step 3 of 4",
          tool("Edit", path="src/constants.js", find="  VIDEO: 'video',\n",
               replace="  VIDEO: 'video',\n  CUSTOM: 'custom',\n"),
          tool("Edit", path="src/types/blocks.ts",
               find="export type BlockType = 'text' | 'image' | 'video';",
               replace="export type BlockType = 'text' | 'image' | 'video' | 'custom';"),
          tool("Edit", path="src/types/blocks.ts",
               find="export interface VideoOptions {",
               replace="export interface CustomOptions {\n  title?: string;\n  body: string;\n}\n\n"
                       "export interface VideoOptions {"),
          done("types declared")),
    # step 4: registration
    entry("backend-architect", "plan step 4 of 4", tool("Read", path="src/blocks/registry.js")),
    entry("backend-architect", "plan step 4 of 4",
          tool("Edit", path="src/blocks/registry.js",
               find="import { VideoBlock } from './VideoBlock';\n",
               replace="import { VideoBlock } from './VideoBlock';\n"
                       "import { CustomBlock } from './CustomBlock';\n"),
          tool("Edit", path="src/blocks/registry.js",
               find="registerBlock(BLOCK_TYPES.VIDEO, VideoBlock);\n",
               replace="registerBlock(BLOCK_TYPES.VIDEO, VideoBlock);\n"
                       "registerBlock('custom', CustomBlock);\n"),
          tool("Edit", path="src/blocks/index.js",
               find="export { VideoBlock } from './VideoBlock';\n",
               replace="export { VideoBlock } from './VideoBlock';\n"
                       "export { CustomBlock } from './CustomBlock';\n"),
          done("CustomBlock registered")),
    # the first test run fails on the serialization whitelist
    entry("backend-architect", "Fix attempt 1",
          tool("Read", path="src/serialization/whitelist.js"),
          tool("Edit", path="src/serialization/whitelist.js",
               find="  BLOCK_TYPES.VIDEO,\n];",
               replace="  BLOCK_TYPES.VIDEO,\n  BLOCK_TYPES.CUSTOM,\n];"),
          msg("The custom type was missing from SERIALIZABLE_TYPES."),
          done("whitelist updated")),
    entry("code-reviewer", "Files touched:", msg(json.dumps(REVIEW))),
]


def main():
    lines = ["# Scripted provider responses for the CustomBlock scenario (generated by build_fixture.py)"]
    lines += [json.dumps(e, sort_keys=True) for e in ENTRIES]
    (HERE / "fixture.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
