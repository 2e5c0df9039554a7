from pcinr.cli import main

raise SystemExit(main())
