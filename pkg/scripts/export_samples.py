"""Write sample JSON documents for the CLI: a pomdp/1 model and the four
teachdomain/1 scenario files."""

import argparse
from pathlib import Path

from teachmind.domain import scenario_library
from teachmind.formats import model_to_json, scenario_to_json
from teachmind.micro import two_door_model


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="samples")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "two_door.pomdp.json").write_text(model_to_json(two_door_model()) + "\n")
    for scenario in scenario_library():
        path = out / f"{scenario.name}.scenario.json"
        path.write_text(scenario_to_json(scenario) + "\n")
    print(f"wrote {1 + len(scenario_library())} files to {out}/")


if __name__ == "__main__":
    main()
