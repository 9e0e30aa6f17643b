# besselab/services/artifacts/__init__.py
# Output files: CSV tables, binary field dumps, run manifests.
