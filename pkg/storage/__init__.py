"""
Formatos de archivo: datasets JSONL, manifests de división y archivos de puntuaciones.
"""
