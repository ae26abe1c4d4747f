#!/usr/bin/env python3
"""
🔍 Toolkit Health Check
=======================

Quick end-to-end check of the quantization toolkit: packages, modules,
the published constants and a small exact experiment. Run it after an
install or an upgrade of numpy/scipy.
"""

import sys
import importlib
import math
from pathlib import Path
import warnings
warnings.filterwarnings('ignore')

sys.path.append(str(Path(__file__).parent))


def check_imports():
    """Check all required imports work"""
    print("🔍 CHECKING IMPORTS")
    print("-" * 30)

    required_packages = [
        'pandas',
        'numpy',
        'scipy',
        'joblib',
        'dotenv',
    ]

    failed_imports = []

    for package in required_packages:
        try:
            importlib.import_module(package)
            print(f"✅ {package}")
        except ImportError as e:
            print(f"❌ {package}: {e}")
            failed_imports.append(package)

    return len(failed_imports) == 0


def check_modules():
    """Check toolkit modules can be imported"""
    print("\n📦 CHECKING TOOLKIT MODULES")
    print("-" * 30)

    modules = [
        ('src.data.sources', 'Sources'),
        ('src.lattice.decoders', 'Lattice decoders'),
        ('src.lattice.moments', 'Voronoi moments'),
        ('src.quantization.evaluation', 'Quantizer evaluation'),
        ('src.bounds.analytic', 'Analytic bounds'),
        ('src.asymptotics.pipeline', 'Excess-rate pipeline'),
        ('src.cli.commands', 'Command line'),
    ]

    failed = []

    for module_name, display_name in modules:
        try:
            importlib.import_module(module_name)
            print(f"✅ {display_name}")
        except Exception as e:
            print(f"❌ {display_name}: {e}")
            failed.append(display_name)

    return len(failed) == 0


def check_constants():
    """Check the per-dimension bounds against the published values"""
    print("\n📐 CHECKING BOUND CONSTANTS")
    print("-" * 30)

    try:
        from src.bounds.analytic import (
            excess_rate_lb,
            excess_rate_lb_per_dim_quadratic,
            interval_moment,
            nats_to_bits,
            tessellating_excess,
        )

        checks = [
            ("d=1 lower bound", nats_to_bits(excess_rate_lb(1, 2.0)), 0.2546),
            ("d=10 lower bound", nats_to_bits(excess_rate_lb_per_dim_quadratic(10)), 0.1196),
            ("interval tessellation", nats_to_bits(tessellating_excess(interval_moment(2.0), 1, 2.0)), 0.2546),
        ]
        ok = True
        for label, value, expected in checks:
            if abs(value - expected) < 1e-4:
                print(f"✅ {label}: {value:.4f} bits")
            else:
                print(f"❌ {label}: {value:.4f} bits, expected {expected}")
                ok = False
        return ok

    except Exception as e:
        print(f"❌ Bound constants error: {e}")
        return False


def check_decoders():
    """Check fast decoders against the brute-force oracle"""
    print("\n🔷 CHECKING LATTICE DECODERS")
    print("-" * 30)

    try:
        import numpy as np
        from src.lattice.decoders import brute_force_nearest, nearest_point, parse_lattice

        rng = np.random.default_rng(0)
        ok = True
        for name in ("Z:2", "D:4", "Dstar:3", "A:2", "E8"):
            lat = parse_lattice(name)
            x = rng.uniform(-2, 2, size=(20, lat.ambient_dim))
            if lat.family == "A":
                x -= x.mean(axis=1, keepdims=True)
            fast = nearest_point(lat, x)
            slow = np.array([brute_force_nearest(lat, row) for row in x])
            gap = np.max(np.sum((x - fast) ** 2, axis=1) - np.sum((x - slow) ** 2, axis=1))
            if gap <= 1e-9:
                print(f"✅ {name}")
            else:
                print(f"❌ {name}: decoder off by {gap:.3g}")
                ok = False
        return ok

    except Exception as e:
        print(f"❌ Decoder error: {e}")
        return False


def check_scalar_experiment():
    """Check one exact point of the Gaussian excess-rate curve"""
    print("\n📊 CHECKING SCALAR EXPERIMENT")
    print("-" * 30)

    try:
        from src.asymptotics.pipeline import excess_rate_curve
        from src.data.sources import GaussianSource

        curve = excess_rate_curve(GaussianSource(), 2.0, [1e-4])
        excess = curve.points[0].excess_bits
        target = 0.5 * math.log2(math.pi * math.e / 6)
        if abs(excess - target) < 0.01:
            print(f"✅ Gaussian excess at D=1e-4: {excess:.5f} bits")
            return True
        print(f"❌ Gaussian excess at D=1e-4: {excess:.5f} bits, expected about {target:.5f}")
        return False

    except Exception as e:
        print(f"❌ Scalar experiment error: {e}")
        return False


def check_project_files():
    """Check project files are present"""
    print("\n🗂️ CHECKING PROJECT FILES")
    print("-" * 30)

    project_files = [
        ('requirements.txt', 'Requirements'),
        ('pytest.ini', 'Test configuration'),
        ('README.md', 'README'),
        ('hrq.py', 'Command-line entry point'),
    ]

    all_exist = True

    for file_path, description in project_files:
        if (Path(__file__).parent / file_path).exists():
            print(f"✅ {description}")
        else:
            print(f"❌ {description}")
            all_exist = False

    return all_exist


def main():
    """Run complete health check"""
    print("🧮 HRQ TOOLKIT - HEALTH CHECK")
    print("=" * 50)

    checks = [
        ("Imports", check_imports),
        ("Toolkit Modules", check_modules),
        ("Bound Constants", check_constants),
        ("Lattice Decoders", check_decoders),
        ("Scalar Experiment", check_scalar_experiment),
        ("Project Files", check_project_files),
    ]

    results = []

    for check_name, check_func in checks:
        try:
            result = check_func()
            results.append((check_name, result))
        except Exception as e:
            print(f"\n❌ {check_name} check failed: {e}")
            results.append((check_name, False))

    # Summary
    print("\n🏆 HEALTH CHECK SUMMARY")
    print("=" * 30)

    passed = sum(1 for _, result in results if result)
    total = len(results)

    for check_name, result in results:
        status = "✅ PASS" if result else "❌ FAIL"
        print(f"{status} {check_name}")

    print(f"\n📊 Overall: {passed}/{total} checks passed")

    if passed == total:
        print("\n🎉 ALL CHECKS PASSED")
        return True
    else:
        print(f"\n⚠️ {total - passed} checks failed")
        return False


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
