# eulimit package
