import sys
from calabiflow.cli import main

sys.exit( main() )
