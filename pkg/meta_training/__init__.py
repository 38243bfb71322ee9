"""
Meta-MCTG sobre un generador condicional lineal-softmax de juguete.
"""
