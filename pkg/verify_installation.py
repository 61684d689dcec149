#!/usr/bin/env python3
"""
Installation verification script for Django Gelfand
Run this script to check the numerical stack and solve one small problem
"""

import importlib
import sys

REQUIRED = (
    ('Django', 'django'),
    ('numpy', 'numpy'),
    ('scipy', 'scipy'),
    ('django-gelfand', 'django_gelfand'),
)


def _version(module):
    if hasattr(module, 'get_version'):
        return module.get_version()
    return getattr(module, '__version__', '?')


def test_imports():
    """Import every required package and print its version"""

    print("🔍 Testing Django Gelfand installation...\n")

    for name, module_name in REQUIRED:
        try:
            module = importlib.import_module(module_name)
        except ImportError as e:
            print(f"❌ {name} import failed: {e}")
            return False
        print(f"✅ {name} {_version(module)}")

    print("\n🎉 All dependencies installed successfully!")
    print("\n📋 Next steps:")
    print("1. Add 'django_gelfand' to INSTALLED_APPS in settings.py")
    print("2. Optionally set GELFAND_GRAPH_DIR to a folder of graph files")
    print("3. Run: python manage.py gelfand demo")

    return True


def test_solver():
    """Solve path4-exp at λ = 0.1 and compare with -W0(-0.2)"""
    try:
        import django
        from django.conf import settings

        if not settings.configured:
            settings.configure(INSTALLED_APPS=['django_gelfand'])
        django.setup()

        from django_gelfand.catalogs import get_example
        from django_gelfand.scalar import lambert_w0
        from django_gelfand.solver import minimal_solve

        example = get_example('path4-exp')
        solution = minimal_solve(example.domain, example.f, 0.1)
        error = abs(solution.norm_inf + lambert_w0(-0.2))
        if error > 1e-8:
            print(f"⚠️  Minimal solution off by {error:.3g}: {solution}")
            return False
        print(f"✅ Solver check successful: {solution}")
        return True

    except Exception as e:
        print(f"⚠️  Solver check failed: {e}")
        return False


if __name__ == '__main__':
    print("=" * 60)
    print("Django Gelfand Installation Verification")
    print("=" * 60)

    if test_imports() and test_solver():
        print("\n✨ Installation verification complete!")
        sys.exit(0)
    print("\n💥 Installation verification failed!")
    print("Please install missing dependencies and try again.")
    sys.exit(1)
