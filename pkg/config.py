import os
from dotenv import load_dotenv


load_dotenv()

# Paralelismo de reinicios (búsqueda ACD / Few-Shot)
COMPSPLIT_THREADS = max(1, int(os.getenv("COMPSPLIT_THREADS", "1")))

# Valores por defecto de la búsqueda. Ninguno viene fijado por el benchmark.
DEFAULT_ALPHA = float(os.getenv("COMPSPLIT_ALPHA", "0.5"))
DEFAULT_T1 = int(os.getenv("COMPSPLIT_T1", "100"))
DEFAULT_T2 = int(os.getenv("COMPSPLIT_T2", "50"))
DEFAULT_ETA = float(os.getenv("COMPSPLIT_ETA", "0.5"))
DEFAULT_SEED = int(os.getenv("COMPSPLIT_SEED", "0"))

# Límite de coberturas mínimas a enumerar antes de pasar a hill climbing
ENUMERATION_BUDGET = int(os.getenv("COMPSPLIT_ENUM_BUDGET", "50000"))

# Intentos de rechazo por cada división aleatoria pedida
REJECTION_BUDGET = int(os.getenv("COMPSPLIT_REJECTION_BUDGET", "1000"))

LOG_LEVEL = os.getenv("COMPSPLIT_LOG_LEVEL", "INFO")

# Entrenamiento meta (λ=0.01 y β=α como en la configuración publicada)
DEFAULT_ALPHA_LR = float(os.getenv("COMPSPLIT_ALPHA_LR", "0.02"))
DEFAULT_LAMBDA = float(os.getenv("COMPSPLIT_LAMBDA", "0.01"))

# Dígitos significativos al serializar números
SIGNIFICANT_DIGITS = 12
