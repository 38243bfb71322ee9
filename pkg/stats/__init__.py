"""
Módulo de métricas del benchmark.
Brechas composicionales, promedios A_avg / P_avg / G_avg y diversidad Dist-n.
"""
