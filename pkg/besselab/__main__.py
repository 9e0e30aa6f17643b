# besselab/__main__.py
# Allows `python -m besselab <subcommand> ...`.

from besselab.cli import main

if __name__ == "__main__":  # pragma: no cover
    main()
