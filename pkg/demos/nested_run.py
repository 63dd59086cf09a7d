"""Nested cross-validation on the bundled table, then batch prediction.

Same thing the command line does with ``phishstack run --config configs/smoke.cfg``.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

from phishstack.runner import emit_report, load_config, predict_batch, run_experiment, write_result
from phishstack.synthetic import bundled_paths

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "smoke.cfg")
out = Path(tempfile.mkdtemp(prefix="phishstack_"))
cfg = replace(cfg, output_dir=str(out))

res = run_experiment(cfg)
write_result(res, out)
emit_report(res, out)
print((out / "candidates.csv").read_text())
print((out / "stacked.csv").read_text())
for fr in res.folds:
    print(fr.fold, fr.selected, fr.mlp_choice, "leaks", fr.leakage_violations)

csv_path, schema_path = bundled_paths()
text = predict_batch(res.folds[0].model_path, csv_path, schema_path)
print("\n".join(text.splitlines()[:5]))
print("...")
print("\n".join(text.splitlines()[-8:]))
