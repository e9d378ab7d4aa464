"""The command-line workflow, driven from Python: synth -> buckets -> train -> eval -> predict.

Equivalent shell commands are printed as they run. ``python demos/03_command_line.py [workdir]``
"""

import json
import shlex
import sys
import tempfile
from pathlib import Path

from ordinal_sim.cli import main

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="ordinal-sim-"))


def sh(*args):
    print("$ ordinal-sim " + " ".join(shlex.quote(str(a)) for a in args))
    code = main([str(a) for a in args])
    if code:
        sys.exit(code)


sh("synth", "--out-dir", work / "data", "--n-pairs", 10_000, "--seed", 1)
sh("buckets", "--input", work / "data/train.tsv", "--k", 5, "--out", work / "scheme.json")

(work / "config.json").write_text(json.dumps({
    "hidden": [64, 32],
    "dropout": [0.1, 0.1],
    "kind": "atmsel",
    "max_epochs": 150,
    "patience": 15,
    "seed": 1,
    "scheme_path": "scheme.json",
    "train_path": "data/train.tsv",
    "val_path": "data/val.tsv",
    "embeddings_path": "data/embeddings.txt",
}, indent=2))

sh("train", "--config", work / "config.json", "--checkpoint", work / "model.json", "--log", work / "train.log")
sh("eval", "--checkpoint", work / "model.json", "--dataset", work / "data/test.tsv",
   "--embeddings", work / "data/embeddings.txt", "--out", work / "report.txt")
print((work / "report.txt").read_text())
sh("predict", "--checkpoint", work / "model.json", "--embeddings", work / "data/embeddings.txt",
   "--pair", "w001 w017 w250", "w001 w017 w999")
print(f"artifacts in {work}")
