"""
cosmic-mu entry point.

:copyright: (c) 2025-2026 by the cosmic-mu developers.
:license: MPL-2.0, see LICENSE for more details.
"""

from cosmic_mu import run

if __name__ == "__main__":
    run()
