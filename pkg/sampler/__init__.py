"""
Lotes pseudo-composicionales y reparto de registros entre divisiones.
"""
