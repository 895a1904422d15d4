"""Hierarchy level and contextual fraction of the bundled and preset models.

    python scripts/hierarchy_tables.py
"""
from pathlib import Path

import contextuality
from contextuality.hierarchy import classify, contextual_fraction
from contextuality.noise import make_channel
from contextuality.quantum import model_from_quantum, preset_model
from contextuality.scenario import load_model, signalling_deficit

FIXTURES = Path(contextuality.__file__).with_name("fixtures")


def rows():
    for name in ("chsh", "hardy", "pr_box", "kcbs_anticorrelated"):
        yield name, load_model(FIXTURES / f"{name}.json", exact=True)
    for name in ("chsh-pi3", "kcbs", "pm"):
        yield f"{name} (quantum)", model_from_quantum(preset_model(name))
    for p in (0.05, 0.2):
        ch = make_channel("depolarizing", p, 2)
        yield f"pm, depolarizing p={p}", model_from_quantum(preset_model("pm", ch))


def main():
    print(f"{'model':<28} {'level':<14} {'CF':>10} {'signalling':>11}")
    for name, m in rows():
        level = classify(m).level
        cf = contextual_fraction(m).cf
        cf_text = str(cf) if m.exact else f"{float(cf):.6f}"
        print(f"{name:<28} {level:<14} {cf_text:>10} {float(signalling_deficit(m)):>11.3g}")


if __name__ == "__main__":
    main()
