"""
Command-line entry point ``dcplp``.

``dcplp infer program.pl --query ...`` runs the ``infer`` management
command under the production settings; the subcommands are the commands of
the ``inference`` app.
"""
import os
import sys
from typing import List, Optional

SUBCOMMANDS = ('infer', 'desugar', 'ground', 'formula', 'compile', 'validate', 'oracle')


def run(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dcproblog.settings.production')
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        sys.stderr.write(f"usage: dcplp {{{','.join(SUBCOMMANDS)}}} PROGRAM [options]\n")
        return 0 if argv and argv[0] in ('-h', '--help') else 1

    from django.core.management import ManagementUtility

    try:
        ManagementUtility(['dcplp'] + argv).execute()
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
