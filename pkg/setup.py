#!/usr/bin/env python3
"""
neural_weave Setup Script

Checks the numerical stack, writes a .env with the run settings and
renders a tiny reference image as a smoke test.

Usage:
    python setup.py
"""

import os
import sys
from pathlib import Path

try:
    from src.neural_weave.__version__ import __version__
except ImportError:
    __version__ = "0.3.0"


def print_header():
    print("=" * 60)
    print(f"neural_weave Setup Assistant v{__version__}")
    print("=" * 60)
    print()
    print("This script writes a .env for dataset generation, training and rendering.")
    print("You can re-run it anytime to update the settings.")
    print()


def check_dependencies():
    """Check if required dependencies are installed."""
    print("Checking dependencies...")

    missing_deps = []
    # Map package names to their import names
    package_imports = {
        'numpy': 'numpy',
        'scipy': 'scipy',
        'torch': 'torch',
        'pandas': 'pandas',
        'Pillow': 'PIL',
        'matplotlib': 'matplotlib',
        'tqdm': 'tqdm',
        'python-dotenv': 'dotenv',
    }

    for package, import_name in package_imports.items():
        try:
            __import__(import_name)
            print(f"  ok       {package}")
        except ImportError:
            missing_deps.append(package)
            print(f"  missing  {package}")

    if missing_deps:
        print()
        print("Missing dependencies detected!")
        print(f"pip install {' '.join(missing_deps)}")
        print("\nOr install all dependencies:")
        print("pip install -r requirements.txt")
        return False

    print("  All dependencies found!")
    return True


def create_env_file():
    """Create .env file with user input."""
    print("\nSetting up environment configuration...")

    env_path = Path(".env")
    if env_path.exists():
        response = input("  .env file already exists. Overwrite? (y/N): ").strip().lower()
        if response != 'y':
            print("  Keeping existing .env file.")
            return

    cpus = os.cpu_count() or 1
    threads = input(f"  Worker threads ({cpus}): ").strip() or str(cpus)
    seed = input("  Global seed (0): ").strip() or "0"
    output_dir = input("  Dataset directory (data): ").strip() or "data"
    weights = input("  Weight file (weights.wwnn): ").strip() or "weights.wwnn"
    samples = input("  Oracle samples per query (2048): ").strip() or "2048"
    budget = input("  Queries per material (50000): ").strip() or "50000"

    env_content = f"""# neural_weave configuration
# Generated by setup script

NEURAL_WEAVE_ENVIRONMENT=production
NEURAL_WEAVE_LOG_LEVEL=INFO
NEURAL_WEAVE_LOG_FORMAT=simple

NEURAL_WEAVE_THREADS={threads}
NEURAL_WEAVE_SEED={seed}

NEURAL_WEAVE_OUTPUT_DIR={output_dir}
NEURAL_WEAVE_SAMPLES={samples}
NEURAL_WEAVE_QUERY_BUDGET={budget}
NEURAL_WEAVE_WEIGHTS={weights}
"""
    env_path.write_text(env_content)
    print("  Created .env file")


def test_configuration():
    """Load the configuration and render a few reference pixels."""
    print("\nTesting configuration...")
    try:
        from src.neural_weave.config import load_config
        from src.neural_weave.container import Container
        from src.neural_weave.domain.enums import RenderMode

        config = load_config(validate_runtime=False)
        print("  Configuration loaded")
        for issue in config.validate_runtime_requirements():
            print(f"  warning: {issue}")

        scene_path = Path("scenes/single_cloth.json")
        if not scene_path.exists():
            print(f"  Scene not found, skipping render: {scene_path}")
            return
        container = Container(config=config)
        scene = container.scene_repository.load(scene_path)
        image = container.reference_render_service.render(scene, RenderMode.REFERENCE, spp=4, resolution=(8, 8))
        print(f"  Reference render ok, mean radiance {float(image.mean()):.4f}")
    except Exception as e:
        print(f"  Configuration test failed: {e}")


def print_next_steps():
    print("\n" + "=" * 60)
    print("Setup Complete!")
    print("=" * 60)
    print()
    print("Next steps:")
    print("1. Generate data:   python -m src.neural_weave gen-dataset")
    print("2. Train:           python -m src.neural_weave train data/*.wwds")
    print("3. Render:          python -m src.neural_weave render --scene scenes/single_cloth.json --out renders/cloth")
    print()
    print("Documentation:")
    print("- CONTRIBUTING.md - Layout, commands and testing")
    print("- SPEC_FULL.md - Behaviour and formats")


def main():
    print_header()

    if not check_dependencies():
        sys.exit(1)

    create_env_file()

    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        print("Warning: Could not load python-dotenv")

    test_configuration()
    print_next_steps()


if __name__ == "__main__":
    main()
