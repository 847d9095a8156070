from kdeavg.cli import main
import sys

sys.exit(main())
