"""
Protocolos de división: Hold-Out, Few-Shot, ACD y las líneas base Random / MinDiv.
"""
