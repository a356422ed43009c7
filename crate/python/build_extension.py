"""Build the gdpl_py extension module and place it next to this script.

The Python package mirrors on this machine carry neither maturin nor
setuptools-rust, so the extension is built directly with cargo and
copied under a name the import machinery accepts.
"""

import shutil
import subprocess
from pathlib import Path


def main() -> None:
    root = Path(__file__).resolve().parents[1]
    subprocess.run(["cargo", "build", "--release", "-p", "gdpl-py"], cwd=root, check=True)
    built = root / "target" / "release" / "libgdpl_py.so"
    if not built.exists():
        built = root / "target" / "release" / "libgdpl_py.dylib"
    dest = Path(__file__).resolve().parent / "gdpl_py.so"
    shutil.copy2(built, dest)
    print(f"installed {dest}")


if __name__ == "__main__":
    main()
