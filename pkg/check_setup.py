#!/usr/bin/env python3
"""
File: check_setup.py
Path: check_setup.py
Purpose: Verify that the trajsim environment is properly configured
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

import os
import sys


def check_venv():
    """Check if virtual environment exists."""
    if os.path.exists('venv'):
        print("✓ Virtual environment exists")
        return True
    else:
        print("✗ Virtual environment not found")
        print("  Run: ./setup.sh")
        return False


def check_env_file():
    """Check if .env file exists."""
    if os.path.exists('.env'):
        print("✓ .env file exists")
    else:
        print("✗ .env file not found")
        print("  Built-in defaults will be used; run ./setup.sh to create one")
    return True  # Not critical


def check_output_dir():
    """Check that the output directory is writable."""
    out = os.getenv('TRAJSIM_OUTPUT_DIR', 'exports')
    os.makedirs(out, exist_ok=True)
    if os.access(out, os.W_OK):
        print(f"✓ Output directory writable: {out}")
        return True
    print(f"✗ Output directory not writable: {out}")
    return False


def check_imports():
    """Check if required modules can be imported."""
    modules = [
        ('numpy', 'NumPy'),
        ('scipy', 'SciPy'),
        ('reportlab', 'ReportLab'),
        ('dotenv', 'python-dotenv'),
        ('pytest', 'pytest'),
    ]
    all_found = True
    for module_name, label in modules:
        try:
            module = __import__(module_name)
            version = getattr(module, '__version__', None)
            print(f"✓ {label} installed" + (f" (version {version})" if version else ""))
        except ImportError:
            print(f"✗ {label} not installed")
            print("  Run: ./setup.sh")
            all_found = False
    return all_found


def check_package_structure():
    """Check if the trajsim package can be imported."""
    try:
        from trajsim.cli import main  # noqa: F401
        print("✓ trajsim package can be imported")
        return True
    except ImportError as e:
        print(f"✗ trajsim import failed: {e}")
        return False


def main():
    """Run all checks."""
    print()
    print("=" * 60)
    print("  trajsim - Environment Check")
    print("=" * 60)
    print()

    # Check if we're in the right directory
    if not os.path.exists('trajsim') or not os.path.exists('setup.sh'):
        print("✗ Not in the trajsim root directory")
        print("  Please run this script from the project root")
        print()
        sys.exit(1)

    checks = [
        ("Virtual Environment", check_venv),
        ("Environment File", check_env_file),
        ("Output Directory", check_output_dir),
        ("Python Modules", check_imports),
        ("Package Structure", check_package_structure),
    ]

    all_passed = True
    for name, check_func in checks:
        print(f"\nChecking {name}:")
        if not check_func():
            all_passed = False

    print()
    print("=" * 60)
    if all_passed:
        print("  ✓ All checks passed!")
        print()
        print("  You can now run a demo:")
        print("    ./run.sh")
        print("    or")
        print("    python run.py --help")
    else:
        print("  ✗ Some checks failed")
        print()
        print("  Please run setup first:")
        print("    ./setup.sh")
    print("=" * 60)
    print()

    sys.exit(0 if all_passed else 1)


if __name__ == '__main__':
    main()
